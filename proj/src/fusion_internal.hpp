#pragma once

#include <random>

#include "vnscene/fusion_kernel.hpp"

namespace vnscene::fusion::detail {

inline constexpr double kLayerNormEps = 1e-5;

struct LayerNormCache {
  Matrix xhat;
  Vector inv_std;
};

Matrix layer_norm_forward(const Matrix& x, const LayerNormParams& p, LayerNormCache* cache);
// Accumulates d_gamma/d_beta into `grad`; returns d_x.
Matrix layer_norm_backward(const Matrix& dy, const LayerNormParams& p, const LayerNormCache& cache,
                           LayerNormParams& grad);

struct MlpCache {
  Matrix z;       // P x hidden, pre-activation
  Matrix hidden;  // P x hidden, after ReLU
};

Matrix bias_mlp_forward(const BiasMlp& mlp, const Matrix& features, MlpCache* cache);
// Accumulates into `grad` given d(bias) of shape P x H.
void bias_mlp_backward(const BiasMlp& mlp, const Matrix& features, const MlpCache& cache,
                       const Matrix& d_out, BiasMlp& grad);

Matrix uniform(std::mt19937_64& rng, Eigen::Index rows, Eigen::Index cols, double bound);

void check_finite(const Matrix& m, const char* what);

// graph_forward without attention traces.
GraphOutput graph_forward_untraced(const NodeSet& nodes, const GraphConfig& cfg,
                                   const GraphParams& params);

}  // namespace vnscene::fusion::detail
