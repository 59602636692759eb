#pragma once

// Numerical core of the spatial/phonological text-visual fusion graph:
// pairwise geometry features, biased multi-head attention with a confidence
// gate, heterogeneous graph layers, a scalar residual, gated dual-stream
// embedding fusion and the copy mixture. Forward and analytic backward are
// provided for everything with trainable parameters; there is no optimizer.
//
// Matrices hold one node per row. Projections act on the right (X * W).

#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "vnscene/phono_features.hpp"
#include "vnscene/records.hpp"

namespace vnscene::fusion {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

class DegenerateBox : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};
class DimensionMismatch : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};
class ShapeMismatch : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};
class ZeroVector : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};
class NotADistribution : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};
class NonFinite : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// [(cx_j - cx_i)/w_i, (cy_j - cy_i)/h_i, log(w_j/w_i), log(h_j/h_i)]
Eigen::Vector4d spatial_features(const BoundingBox& i, const BoundingBox& j);

// Edge types name source -> target; the target nodes issue the queries.
enum class EdgeType { VT, TV, TT };
inline constexpr EdgeType kAllEdgeTypes[] = {EdgeType::VT, EdgeType::TV, EdgeType::TT};
std::string edge_type_name(EdgeType e);  // "V->T"
EdgeType parse_edge_type(std::string_view name);
inline bool source_is_text(EdgeType e) { return e != EdgeType::VT; }
inline bool target_is_text(EdgeType e) { return e != EdgeType::TV; }

struct GraphConfig {
  std::set<EdgeType> edge_types = {EdgeType::VT, EdgeType::TV, EdgeType::TT};
  int layers = 3;
  int heads = 8;
  int model_dim = 32;
  int bias_hidden = 32;
  int ffn_hidden = 0;  // 0 means 4 * model_dim
  bool use_spatial_bias = true;
  bool use_phono_bias = true;
  bool use_confidence_gate = true;
  bool residual_enabled = true;
  double residual_init = 0.5;

  static GraphConfig full_scale();  // d = 768, H = 8
  static GraphConfig desk_scale();   // d = 32, H = 4

  int head_dim() const { return model_dim / heads; }
  int ffn_width() const { return ffn_hidden > 0 ? ffn_hidden : 4 * model_dim; }
  // Throws DimensionMismatch for d not divisible by H, L < 1 and the like.
  void validate() const;
  // Reads the JSON form used by --config; absent keys keep their defaults.
  static GraphConfig from_json_text(std::string_view text);
  std::string to_json_text() const;
};

struct NodeSet {
  Matrix v_features;  // N_v x d
  Matrix t_features;  // N_t x d
  std::vector<BoundingBox> v_boxes;
  std::vector<BoundingBox> t_boxes;
  std::vector<double> confidences;  // one per text node
  // Pairwise features of the text nodes; the phonological bias is skipped
  // when absent.
  std::optional<phono::PhonoTensor> phono;

  void validate(int model_dim) const;
};

// ---- parameters ------------------------------------------------------------

// in -> hidden (ReLU) -> one output per head, each with a bias.
struct BiasMlp {
  Matrix w1;  // hidden x in
  Matrix b1;  // hidden x 1
  Matrix w2;  // heads x hidden
  Matrix b2;  // heads x 1

  std::size_t parameter_count() const { return w1.size() + b1.size() + w2.size() + b2.size(); }
};

struct EdgeParams {
  Matrix wq, wk, wv, wo;  // d x d
  std::optional<BiasMlp> spatial;
  std::optional<BiasMlp> phono;
  // Per-head gate sigmoid(gate_w * c_j + gate_b), present when keys are text.
  std::optional<Matrix> gate_w;  // heads x 1
  std::optional<Matrix> gate_b;  // heads x 1
};

struct LayerNormParams {
  Matrix gamma;  // 1 x d
  Matrix beta;   // 1 x d
};

struct FfnParams {
  Matrix w1;  // d x hidden
  Matrix b1;  // 1 x hidden
  Matrix w2;  // hidden x d
  Matrix b2;  // 1 x d
};

// Update block of one node type (V or T).
struct BlockParams {
  LayerNormParams ln_attn;
  FfnParams ffn;
  LayerNormParams ln_ffn;
};

struct LayerParams {
  std::map<EdgeType, EdgeParams> edges;
  std::optional<BlockParams> v_block;  // present when V is a target
  std::optional<BlockParams> t_block;  // present when T is a target
};

struct NamedTensor {
  std::string name;
  Matrix* value;
};
struct ConstNamedTensor {
  std::string name;
  const Matrix* value;
};

struct GraphParams {
  std::vector<LayerParams> layers;
  Matrix alpha;  // 1 x 1, shared by all nodes and layers

  // Fan-in uniform init, zero biases, zero bias-MLP output weights, unit
  // layer-norm gain, gate scale 1 and gate bias 0.
  static GraphParams init(const GraphConfig& cfg, std::uint64_t seed);
  // Same shapes, every entry drawn from U(-scale, scale) (gains from
  // 1 + U(-scale, scale)); used to exercise every gradient path.
  static GraphParams random(const GraphConfig& cfg, std::uint64_t seed, double scale = 0.5);
  GraphParams zeros_like() const;

  std::vector<NamedTensor> tensors();
  std::vector<ConstNamedTensor> tensors() const;
  std::size_t parameter_count() const;
  Vector flatten() const;
  void assign(const Vector& flat);
};

// Phonological-bias parameters in one layer (8*hidden + hidden + H*(hidden+1)).
std::size_t phono_bias_parameter_count(const LayerParams& layer);
std::size_t phono_bias_parameter_count(const GraphConfig& cfg);

// ---- primitives ------------------------------------------------------------

Matrix scaled_dot_product(const Matrix& q_head, const Matrix& k_head);
// Row-wise softmax with max subtraction.
Matrix softmax_rows(const Matrix& scores);
// Evaluates the bias perceptron on a batch of feature rows: P x in -> P x H.
Matrix bias_mlp_forward(const BiasMlp& mlp, const Matrix& features);

// Pair features laid out row-major over (query i, key j): row i * N_k + j.
Matrix spatial_pair_features(std::span<const BoundingBox> queries,
                             std::span<const BoundingBox> keys);
Matrix phono_pair_features(const phono::PhonoTensor& tensor);

// Per-head pre-softmax scores for projected queries Q (N_q x d) and keys K
// (N_k x d). Pass nullptr for a bias that is off or not applicable.
std::vector<Matrix> attention_scores(const Matrix& q, const Matrix& k, int heads,
                                     const BiasMlp* spatial_mlp, const Matrix* spatial_features,
                                     const BiasMlp* phono_mlp, const Matrix* phono_features);

// attention (N_q x N_k, post-softmax) times sigmoid(w * c_j + b) per column.
// Rows are not renormalized.
Matrix confidence_gate(const Matrix& attention, std::span<const double> confidences, double w,
                       double b);

// post + sigmoid(alpha) * pre
Matrix residual_preserve(const Matrix& pre_graph, const Matrix& post_graph, double alpha);

double sigmoid(double x);

// Row-wise layer normalization, eps 1e-5.
Matrix layer_norm(const Matrix& x, const LayerNormParams& p);

// ---- graph -----------------------------------------------------------------

struct AttentionTrace {
  EdgeType edge;
  std::vector<Matrix> scores;   // per head, pre-softmax
  std::vector<Matrix> weights;  // per head, post-softmax, before the gate
  std::vector<Matrix> gated;    // per head, after the gate (== weights if off)
};

struct LayerOutput {
  NodeSet nodes;
  std::vector<AttentionTrace> traces;
};

LayerOutput graph_layer(const NodeSet& nodes, const GraphConfig& cfg, const LayerParams& params);

struct GraphOutput {
  Matrix v_features;
  Matrix t_features;
  std::vector<std::vector<AttentionTrace>> traces;  // per layer
};

// All layers, then the scalar residual on every node type that some edge
// type targets (when residual_enabled).
GraphOutput graph_forward(const NodeSet& nodes, const GraphConfig& cfg, const GraphParams& params);

struct GraphGradients {
  GraphParams params;
  Matrix d_v_features;
  Matrix d_t_features;
};

// Gradient of sum(r_v .* out_v) + sum(r_t .* out_t) for upstream r.
GraphGradients graph_backward(const NodeSet& nodes, const GraphConfig& cfg,
                              const GraphParams& params, const Matrix& upstream_v,
                              const Matrix& upstream_t);

// ---- dual-stream fusion ----------------------------------------------------

struct FuseConfig {
  int recognition_dim = 256;
  int detection_dim = 256;
  int linguistic_dim = 768;
  int model_dim = 32;
};

struct DualStreamInput {
  Matrix recognition;  // N_t x recognition_dim
  Matrix detection;    // N_t x detection_dim
  Matrix linguistic;   // N_t x linguistic_dim
};

struct FuseParams {
  Matrix w_vis;  // (recognition_dim + detection_dim) x d
  LayerNormParams ln_vis;
  Matrix w_pho;  // linguistic_dim x d
  LayerNormParams ln_pho;
  Matrix w_g;  // 2d x d
  Matrix b_g;  // 1 x d

  static FuseParams init(const FuseConfig& cfg, std::uint64_t seed);
  static FuseParams random(const FuseConfig& cfg, std::uint64_t seed, double scale = 0.5);
  FuseParams zeros_like() const;
  std::vector<NamedTensor> tensors();
  std::vector<ConstNamedTensor> tensors() const;
  Vector flatten() const;
  void assign(const Vector& flat);
};

struct FuseOutput {
  Matrix fused;
  Matrix visual;
  Matrix linguistic;
  Matrix gate;
};

// Throws ZeroVector for a recognition or detection row of zero norm.
FuseOutput dual_stream_fuse(const DualStreamInput& input, const FuseParams& params);
// Gradient of sum(upstream .* fused) with respect to the parameters.
FuseParams dual_stream_backward(const DualStreamInput& input, const FuseParams& params,
                                const Matrix& upstream);

// ---- copy mixture ----------------------------------------------------------

// (1 - p_copy) * p_vocab followed by p_copy * p_ocr.
Vector copy_mixture(const Vector& p_vocab, const Vector& p_ocr, double p_copy);

// ---- embeddings stub ------------------------------------------------------

// Deterministic stand-in for an external linguistic encoder: each row is
// drawn from a generator seeded by a hash of the token and `seed`, entries
// in [-1, 1).
Matrix stub_embedding(std::span<const std::string> tokens, int dim, std::uint64_t seed);

// ---- gradient check --------------------------------------------------------

struct GradientCheckOptions {
  double step = 1e-5;
  // Relative error is |a - n| / max(|a|, |n|, floor).
  double floor = 1e-4;
  // Applied to the analytic gradient before comparison; for harness tests.
  double corrupt_scale = 1.0;
};

struct GradientCheckEntry {
  std::string tensor;
  std::size_t index = 0;
  double analytic = 0.0;
  double numeric = 0.0;
  double relative_error = 0.0;
};

struct GradientCheckReport {
  double max_relative_error = 0.0;
  std::size_t parameters_checked = 0;
  GradientCheckEntry worst;
  std::map<std::string, double> per_tensor;  // max relative error by tensor
};

double relative_error(double analytic, double numeric, double floor);

// Loss sum(r_v .* out_v) + sum(r_t .* out_t). Throws NonFinite.
GradientCheckReport gradient_check(const NodeSet& nodes, const GraphConfig& cfg,
                                   const GraphParams& params, const Matrix& upstream_v,
                                   const Matrix& upstream_t,
                                   const GradientCheckOptions& options = {});

GradientCheckReport gradient_check_fuse(const DualStreamInput& input, const FuseParams& params,
                                        const Matrix& upstream,
                                        const GradientCheckOptions& options = {});

// Random instance for tests and the CLI: boxes with positive extent,
// confidences in [0.05, 1], features in [-1, 1], phono tensor from `tokens`
// (which must have n_text entries) when given.
NodeSet random_instance(int n_visual, int n_text, int model_dim, std::uint64_t seed,
                        std::span<const std::string> tokens = {});

}  // namespace vnscene::fusion
