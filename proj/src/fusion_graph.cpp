#include <cmath>

#include "fusion_internal.hpp"
#include "vnscene/fusion_kernel.hpp"

namespace vnscene::fusion {

namespace {

using detail::LayerNormCache;
using detail::MlpCache;

struct EdgeCache {
  EdgeType edge = EdgeType::TT;
  bool active = false;  // false when either side has no nodes
  Matrix q, k, v;
  Matrix sp_features, ph_features;
  bool has_sp = false;
  bool has_ph = false;
  MlpCache sp, ph;
  std::vector<Matrix> scores, weights, gated;
  Matrix gate;  // heads x N_k, empty when the gate is off
  Matrix ocat;
  Matrix msg;
};

struct BlockCache {
  LayerNormCache ln_attn;
  Matrix h;
  Matrix z1;
  Matrix r1;
  LayerNormCache ln_ffn;
};

struct LayerCache {
  NodeSet in;
  std::vector<EdgeCache> edges;
  std::optional<BlockCache> v_block;
  std::optional<BlockCache> t_block;
};

bool gate_on(const GraphConfig& cfg, EdgeType e, const EdgeParams& p) {
  return cfg.use_confidence_gate && source_is_text(e) && p.gate_w && p.gate_b;
}

EdgeCache edge_forward(const NodeSet& nodes, EdgeType e, const EdgeParams& p,
                       const GraphConfig& cfg) {
  const Matrix& xq = target_is_text(e) ? nodes.t_features : nodes.v_features;
  const Matrix& xk = source_is_text(e) ? nodes.t_features : nodes.v_features;
  const auto& qboxes = target_is_text(e) ? nodes.t_boxes : nodes.v_boxes;
  const auto& kboxes = source_is_text(e) ? nodes.t_boxes : nodes.v_boxes;
  const int heads = cfg.heads;
  const Eigen::Index dh = cfg.head_dim();

  EdgeCache c;
  c.edge = e;
  c.msg = Matrix::Zero(xq.rows(), cfg.model_dim);
  if (xq.rows() == 0 || xk.rows() == 0) return c;
  c.active = true;

  c.q = xq * p.wq;
  c.k = xk * p.wk;
  c.v = xk * p.wv;
  Matrix sp;
  Matrix ph;
  if (cfg.use_spatial_bias && p.spatial) {
    c.has_sp = true;
    c.sp_features = spatial_pair_features(qboxes, kboxes);
    sp = detail::bias_mlp_forward(*p.spatial, c.sp_features, &c.sp);
  }
  if (cfg.use_phono_bias && p.phono && e == EdgeType::TT && nodes.phono) {
    c.has_ph = true;
    c.ph_features = phono_pair_features(*nodes.phono);
    ph = detail::bias_mlp_forward(*p.phono, c.ph_features, &c.ph);
  }
  const bool gated = gate_on(cfg, e, p);
  if (gated) {
    c.gate.resize(heads, xk.rows());
    for (int h = 0; h < heads; ++h) {
      for (Eigen::Index j = 0; j < xk.rows(); ++j) {
        c.gate(h, j) = sigmoid((*p.gate_w)(h, 0) * nodes.confidences[std::size_t(j)] +
                               (*p.gate_b)(h, 0));
      }
    }
  }

  c.ocat.resize(xq.rows(), cfg.model_dim);
  for (int h = 0; h < heads; ++h) {
    Matrix s = scaled_dot_product(c.q.middleCols(h * dh, dh), c.k.middleCols(h * dh, dh));
    if (c.has_sp) s += sp.col(h).reshaped<Eigen::RowMajor>(xq.rows(), xk.rows());
    if (c.has_ph) s += ph.col(h).reshaped<Eigen::RowMajor>(xq.rows(), xk.rows());
    Matrix a = softmax_rows(s);
    Matrix g = a;
    if (gated) g = a * c.gate.row(h).asDiagonal();
    c.ocat.middleCols(h * dh, dh) = g * c.v.middleCols(h * dh, dh);
    c.scores.push_back(std::move(s));
    c.weights.push_back(std::move(a));
    c.gated.push_back(std::move(g));
  }
  c.msg = c.ocat * p.wo;
  return c;
}

void edge_backward(const NodeSet& nodes, const EdgeCache& c, const EdgeParams& p,
                   const GraphConfig& cfg, const Matrix& d_msg, EdgeParams& grad, Matrix& d_v,
                   Matrix& d_t) {
  if (!c.active) return;
  const EdgeType e = c.edge;
  const Matrix& xq = target_is_text(e) ? nodes.t_features : nodes.v_features;
  const Matrix& xk = source_is_text(e) ? nodes.t_features : nodes.v_features;
  Matrix& d_xq = target_is_text(e) ? d_t : d_v;
  Matrix& d_xk = source_is_text(e) ? d_t : d_v;
  const int heads = cfg.heads;
  const Eigen::Index dh = cfg.head_dim();
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
  const auto nq = xq.rows();
  const auto nk = xk.rows();

  grad.wo += c.ocat.transpose() * d_msg;
  const Matrix d_ocat = d_msg * p.wo.transpose();
  Matrix dq = Matrix::Zero(nq, cfg.model_dim);
  Matrix dk = Matrix::Zero(nk, cfg.model_dim);
  Matrix dv = Matrix::Zero(nk, cfg.model_dim);
  Matrix d_sp(c.has_sp ? nq * nk : 0, heads);
  Matrix d_ph(c.has_ph ? nq * nk : 0, heads);
  const bool gated = c.gate.size() > 0;

  for (int h = 0; h < heads; ++h) {
    const auto d_o = d_ocat.middleCols(h * dh, dh);
    const Matrix& a = c.weights[std::size_t(h)];
    const Matrix d_gated = d_o * c.v.middleCols(h * dh, dh).transpose();
    dv.middleCols(h * dh, dh) = c.gated[std::size_t(h)].transpose() * d_o;
    Matrix da = d_gated;
    if (gated) {
      da = d_gated * c.gate.row(h).asDiagonal();
      for (Eigen::Index j = 0; j < nk; ++j) {
        const double g = c.gate(h, j);
        const double du = d_gated.col(j).dot(a.col(j)) * g * (1.0 - g);
        (*grad.gate_w)(h, 0) += du * nodes.confidences[std::size_t(j)];
        (*grad.gate_b)(h, 0) += du;
      }
    }
    const Vector row_dot = (da.array() * a.array()).rowwise().sum();
    const Matrix ds = a.array() * (da.colwise() - row_dot).array();
    dq.middleCols(h * dh, dh) = ds * c.k.middleCols(h * dh, dh) * scale;
    dk.middleCols(h * dh, dh) = ds.transpose() * c.q.middleCols(h * dh, dh) * scale;
    if (c.has_sp) d_sp.col(h) = ds.reshaped<Eigen::RowMajor>();
    if (c.has_ph) d_ph.col(h) = ds.reshaped<Eigen::RowMajor>();
  }
  if (c.has_sp) detail::bias_mlp_backward(*p.spatial, c.sp_features, c.sp, d_sp, *grad.spatial);
  if (c.has_ph) detail::bias_mlp_backward(*p.phono, c.ph_features, c.ph, d_ph, *grad.phono);

  grad.wq += xq.transpose() * dq;
  grad.wk += xk.transpose() * dk;
  grad.wv += xk.transpose() * dv;
  d_xq += dq * p.wq.transpose();
  d_xk += dk * p.wk.transpose() + dv * p.wv.transpose();
}

Matrix block_forward(const Matrix& x, const Matrix& messages, const BlockParams& p,
                     BlockCache& c) {
  c.h = detail::layer_norm_forward(x + messages, p.ln_attn, &c.ln_attn);
  c.z1 = c.h * p.ffn.w1;
  c.z1.rowwise() += p.ffn.b1.row(0);
  c.r1 = c.z1.cwiseMax(0.0);
  Matrix f = c.r1 * p.ffn.w2;
  f.rowwise() += p.ffn.b2.row(0);
  return detail::layer_norm_forward(c.h + f, p.ln_ffn, &c.ln_ffn);
}

// Returns d(x + messages).
Matrix block_backward(const BlockCache& c, const BlockParams& p, const Matrix& d_out,
                      BlockParams& grad) {
  const Matrix d_s2 = detail::layer_norm_backward(d_out, p.ln_ffn, c.ln_ffn, grad.ln_ffn);
  grad.ffn.w2 += c.r1.transpose() * d_s2;
  grad.ffn.b2 += d_s2.colwise().sum();
  Matrix dz = d_s2 * p.ffn.w2.transpose();
  dz.array() *= (c.z1.array() > 0.0).cast<double>();
  grad.ffn.w1 += c.h.transpose() * dz;
  grad.ffn.b1 += dz.colwise().sum();
  const Matrix dh = d_s2 + dz * p.ffn.w1.transpose();
  return detail::layer_norm_backward(dh, p.ln_attn, c.ln_attn, grad.ln_attn);
}

NodeSet layer_forward(const NodeSet& nodes, const GraphConfig& cfg, const LayerParams& params,
                      LayerCache& cache) {
  cache.in = nodes;
  Matrix m_v = Matrix::Zero(nodes.v_features.rows(), cfg.model_dim);
  Matrix m_t = Matrix::Zero(nodes.t_features.rows(), cfg.model_dim);
  bool v_target = false;
  bool t_target = false;
  for (auto e : cfg.edge_types) {
    auto it = params.edges.find(e);
    if (it == params.edges.end()) {
      throw DimensionMismatch("no parameters for edge type " + edge_type_name(e));
    }
    cache.edges.push_back(edge_forward(nodes, e, it->second, cfg));
    // Messages from several edge types into one node type are summed.
    if (target_is_text(e)) {
      m_t += cache.edges.back().msg;
      t_target = true;
    } else {
      m_v += cache.edges.back().msg;
      v_target = true;
    }
  }
  NodeSet out = nodes;
  if (v_target) {
    if (!params.v_block) throw DimensionMismatch("missing visual update block");
    out.v_features = block_forward(nodes.v_features, m_v, *params.v_block, cache.v_block.emplace());
  }
  if (t_target) {
    if (!params.t_block) throw DimensionMismatch("missing text update block");
    out.t_features = block_forward(nodes.t_features, m_t, *params.t_block, cache.t_block.emplace());
  }
  return out;
}

void layer_backward(const LayerCache& cache, const GraphConfig& cfg, const LayerParams& params,
                    LayerParams& grad, Matrix& d_v, Matrix& d_t) {
  Matrix d_mv;
  Matrix d_mt;
  if (cache.v_block) {
    d_v = block_backward(*cache.v_block, *params.v_block, d_v, *grad.v_block);
    d_mv = d_v;
  }
  if (cache.t_block) {
    d_t = block_backward(*cache.t_block, *params.t_block, d_t, *grad.t_block);
    d_mt = d_t;
  }
  for (const auto& ec : cache.edges) {
    const auto& d_msg = target_is_text(ec.edge) ? d_mt : d_mv;
    edge_backward(cache.in, ec, params.edges.at(ec.edge), cfg, d_msg, grad.edges.at(ec.edge), d_v,
                  d_t);
  }
}

bool targets_visual(const GraphConfig& cfg) { return cfg.edge_types.count(EdgeType::TV) != 0; }
bool targets_text(const GraphConfig& cfg) {
  return cfg.edge_types.count(EdgeType::VT) != 0 || cfg.edge_types.count(EdgeType::TT) != 0;
}

void check_inputs(const NodeSet& nodes, const GraphConfig& cfg, const GraphParams& params) {
  cfg.validate();
  nodes.validate(cfg.model_dim);
  if (params.layers.size() != static_cast<std::size_t>(cfg.layers)) {
    throw DimensionMismatch("parameter layer count differs from the configuration");
  }
}

GraphOutput forward_impl(const NodeSet& nodes, const GraphConfig& cfg, const GraphParams& params,
                         std::vector<LayerCache>* caches, bool keep_traces) {
  check_inputs(nodes, cfg, params);
  GraphOutput out;
  NodeSet cur = nodes;
  for (const auto& layer : params.layers) {
    LayerCache local;
    LayerCache& c = caches ? caches->emplace_back() : local;
    cur = layer_forward(cur, cfg, layer, c);
    if (keep_traces) {
      auto& tr = out.traces.emplace_back();
      for (auto& ec : c.edges) tr.push_back({ec.edge, ec.scores, ec.weights, ec.gated});
    }
  }
  out.v_features = std::move(cur.v_features);
  out.t_features = std::move(cur.t_features);
  if (cfg.residual_enabled) {
    const double s = sigmoid(params.alpha(0, 0));
    if (targets_visual(cfg)) out.v_features += s * nodes.v_features;
    if (targets_text(cfg)) out.t_features += s * nodes.t_features;
  }
  return out;
}

}  // namespace

LayerOutput graph_layer(const NodeSet& nodes, const GraphConfig& cfg, const LayerParams& params) {
  cfg.validate();
  nodes.validate(cfg.model_dim);
  LayerCache c;
  LayerOutput out;
  out.nodes = layer_forward(nodes, cfg, params, c);
  for (auto& ec : c.edges) {
    out.traces.push_back({ec.edge, std::move(ec.scores), std::move(ec.weights), std::move(ec.gated)});
  }
  return out;
}

GraphOutput graph_forward(const NodeSet& nodes, const GraphConfig& cfg, const GraphParams& params) {
  return forward_impl(nodes, cfg, params, nullptr, true);
}

GraphOutput detail::graph_forward_untraced(const NodeSet& nodes, const GraphConfig& cfg,
                                           const GraphParams& params) {
  return forward_impl(nodes, cfg, params, nullptr, false);
}

GraphGradients graph_backward(const NodeSet& nodes, const GraphConfig& cfg,
                              const GraphParams& params, const Matrix& upstream_v,
                              const Matrix& upstream_t) {
  std::vector<LayerCache> caches;
  forward_impl(nodes, cfg, params, &caches, false);
  if (upstream_v.rows() != nodes.v_features.rows() || upstream_t.rows() != nodes.t_features.rows() ||
      (upstream_v.size() && upstream_v.cols() != cfg.model_dim) ||
      (upstream_t.size() && upstream_t.cols() != cfg.model_dim)) {
    throw ShapeMismatch("upstream gradient shape differs from the node features");
  }

  GraphGradients g;
  g.params = params.zeros_like();
  Matrix d_v = upstream_v;
  Matrix d_t = upstream_t;
  Matrix direct_v = Matrix::Zero(d_v.rows(), d_v.cols());
  Matrix direct_t = Matrix::Zero(d_t.rows(), d_t.cols());
  if (cfg.residual_enabled) {
    const double s = sigmoid(params.alpha(0, 0));
    double dot = 0.0;
    if (targets_visual(cfg)) {
      dot += upstream_v.cwiseProduct(nodes.v_features).sum();
      direct_v = s * upstream_v;
    }
    if (targets_text(cfg)) {
      dot += upstream_t.cwiseProduct(nodes.t_features).sum();
      direct_t = s * upstream_t;
    }
    g.params.alpha(0, 0) = dot * s * (1.0 - s);
  }
  for (std::size_t l = caches.size(); l-- > 0;) {
    layer_backward(caches[l], cfg, params.layers[l], g.params.layers[l], d_v, d_t);
  }
  g.d_v_features = d_v + direct_v;
  g.d_t_features = d_t + direct_t;
  return g;
}

}  // namespace vnscene::fusion
