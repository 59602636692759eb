#include "vnscene/fusion_kernel.hpp"

#include <cmath>

#include <json.hpp>

#include "fusion_internal.hpp"

namespace vnscene::fusion {

using detail::LayerNormCache;
using detail::MlpCache;

// ---- small pieces ----------------------------------------------------------

double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

Eigen::Vector4d spatial_features(const BoundingBox& i, const BoundingBox& j) {
  if (!i.valid() || !j.valid()) throw DegenerateBox("box width and height must be positive");
  return {(j.cx - i.cx) / i.w, (j.cy - i.cy) / i.h, std::log(j.w / i.w), std::log(j.h / i.h)};
}

std::string edge_type_name(EdgeType e) {
  switch (e) {
    case EdgeType::VT:
      return "V->T";
    case EdgeType::TV:
      return "T->V";
    case EdgeType::TT:
      return "T->T";
  }
  return "?";
}

EdgeType parse_edge_type(std::string_view name) {
  if (name == "V->T" || name == "VT") return EdgeType::VT;
  if (name == "T->V" || name == "TV") return EdgeType::TV;
  if (name == "T->T" || name == "TT") return EdgeType::TT;
  throw std::invalid_argument("unknown edge type '" + std::string(name) + "'");
}

// ---- config ----------------------------------------------------------------

GraphConfig GraphConfig::full_scale() {
  GraphConfig c;
  c.model_dim = 768;
  c.heads = 8;
  return c;
}

GraphConfig GraphConfig::desk_scale() {
  GraphConfig c;
  c.model_dim = 32;
  c.heads = 4;
  return c;
}

void GraphConfig::validate() const {
  if (layers < 1) throw DimensionMismatch("layers must be at least 1");
  if (heads < 1 || model_dim < 1 || bias_hidden < 1 || ffn_hidden < 0) {
    throw DimensionMismatch("dimensions must be positive");
  }
  if (model_dim % heads != 0) {
    throw DimensionMismatch("model_dim " + std::to_string(model_dim) +
                            " is not divisible by heads " + std::to_string(heads));
  }
  if (edge_types.empty()) throw DimensionMismatch("no edge types enabled");
}

GraphConfig GraphConfig::from_json_text(std::string_view text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw std::invalid_argument(std::string("graph config: ") + e.what());
  }
  if (!j.is_object()) throw std::invalid_argument("graph config must be an object");
  GraphConfig c;
  try {
    for (const auto& [key, v] : j.items()) {
      if (key == "edge_types") {
        c.edge_types.clear();
        for (const auto& e : v) c.edge_types.insert(parse_edge_type(e.get<std::string>()));
      } else if (key == "layers") {
        c.layers = v.get<int>();
      } else if (key == "heads") {
        c.heads = v.get<int>();
      } else if (key == "model_dim") {
        c.model_dim = v.get<int>();
      } else if (key == "bias_hidden") {
        c.bias_hidden = v.get<int>();
      } else if (key == "ffn_hidden") {
        c.ffn_hidden = v.get<int>();
      } else if (key == "use_spatial_bias") {
        c.use_spatial_bias = v.get<bool>();
      } else if (key == "use_phono_bias") {
        c.use_phono_bias = v.get<bool>();
      } else if (key == "use_confidence_gate") {
        c.use_confidence_gate = v.get<bool>();
      } else if (key == "residual_enabled") {
        c.residual_enabled = v.get<bool>();
      } else if (key == "residual_init") {
        c.residual_init = v.get<double>();
      } else {
        throw std::invalid_argument("graph config: unknown key '" + key + "'");
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("graph config: ") + e.what());
  }
  c.validate();
  return c;
}

std::string GraphConfig::to_json_text() const {
  nlohmann::ordered_json j;
  j["edge_types"] = nlohmann::ordered_json::array();
  for (auto e : edge_types) j["edge_types"].push_back(edge_type_name(e));
  j["layers"] = layers;
  j["heads"] = heads;
  j["model_dim"] = model_dim;
  j["bias_hidden"] = bias_hidden;
  j["ffn_hidden"] = ffn_width();
  j["use_spatial_bias"] = use_spatial_bias;
  j["use_phono_bias"] = use_phono_bias;
  j["use_confidence_gate"] = use_confidence_gate;
  j["residual_enabled"] = residual_enabled;
  j["residual_init"] = residual_init;
  return j.dump(2);
}

void NodeSet::validate(int model_dim) const {
  if (v_features.rows() > 0 && v_features.cols() != model_dim) {
    throw DimensionMismatch("visual features have " + std::to_string(v_features.cols()) +
                            " columns, expected " + std::to_string(model_dim));
  }
  if (t_features.rows() > 0 && t_features.cols() != model_dim) {
    throw DimensionMismatch("text features have " + std::to_string(t_features.cols()) +
                            " columns, expected " + std::to_string(model_dim));
  }
  const auto nv = static_cast<std::size_t>(v_features.rows());
  const auto nt = static_cast<std::size_t>(t_features.rows());
  if (v_boxes.size() != nv) throw DimensionMismatch("visual box count differs from node count");
  if (t_boxes.size() != nt) throw DimensionMismatch("text box count differs from node count");
  if (confidences.size() != nt) throw DimensionMismatch("confidence count differs from text nodes");
  for (const auto* boxes : {&v_boxes, &t_boxes}) {
    for (const auto& b : *boxes) {
      if (!b.valid()) throw DegenerateBox("box width and height must be positive");
    }
  }
  if (phono && phono->token_count() != nt) {
    throw DimensionMismatch("phonological tensor size differs from text nodes");
  }
}

// ---- parameter containers ---------------------------------------------------

namespace detail {

Matrix uniform(std::mt19937_64& rng, Eigen::Index rows, Eigen::Index cols, double bound) {
  std::uniform_real_distribution<double> dist(-bound, bound);
  Matrix m(rows, cols);
  for (Eigen::Index c = 0; c < cols; ++c) {
    for (Eigen::Index r = 0; r < rows; ++r) m(r, c) = dist(rng);
  }
  return m;
}

void check_finite(const Matrix& m, const char* what) {
  if (!m.allFinite()) throw NonFinite(std::string("non-finite values in ") + what);
}

}  // namespace detail

namespace {

using detail::uniform;

template <typename Params, typename Out, typename Ptr>
void graph_tensors(Params& p, std::vector<Out>& out) {
  auto add = [&out](std::string name, Ptr m) { out.push_back({std::move(name), m}); };
  auto add_mlp = [&](const std::string& pre, auto& mlp) {
    add(pre + ".w1", &mlp.w1);
    add(pre + ".b1", &mlp.b1);
    add(pre + ".w2", &mlp.w2);
    add(pre + ".b2", &mlp.b2);
  };
  auto add_ln = [&](const std::string& pre, auto& ln) {
    add(pre + ".gamma", &ln.gamma);
    add(pre + ".beta", &ln.beta);
  };
  auto add_block = [&](const std::string& pre, auto& b) {
    add_ln(pre + ".ln_attn", b.ln_attn);
    add(pre + ".ffn.w1", &b.ffn.w1);
    add(pre + ".ffn.b1", &b.ffn.b1);
    add(pre + ".ffn.w2", &b.ffn.w2);
    add(pre + ".ffn.b2", &b.ffn.b2);
    add_ln(pre + ".ln_ffn", b.ln_ffn);
  };
  for (std::size_t l = 0; l < p.layers.size(); ++l) {
    auto& layer = p.layers[l];
    const std::string lp = "layer" + std::to_string(l);
    for (auto& [e, ep] : layer.edges) {
      const std::string pre = lp + "." + edge_type_name(e);
      add(pre + ".wq", &ep.wq);
      add(pre + ".wk", &ep.wk);
      add(pre + ".wv", &ep.wv);
      add(pre + ".wo", &ep.wo);
      if (ep.spatial) add_mlp(pre + ".spatial", *ep.spatial);
      if (ep.phono) add_mlp(pre + ".phono", *ep.phono);
      if (ep.gate_w) add(pre + ".gate_w", &*ep.gate_w);
      if (ep.gate_b) add(pre + ".gate_b", &*ep.gate_b);
    }
    if (layer.v_block) add_block(lp + ".V", *layer.v_block);
    if (layer.t_block) add_block(lp + ".T", *layer.t_block);
  }
  add("alpha", &p.alpha);
}

template <typename Named>
Vector flatten_tensors(const std::vector<Named>& tensors) {
  Eigen::Index n = 0;
  for (const auto& t : tensors) n += t.value->size();
  Vector out(n);
  Eigen::Index at = 0;
  for (const auto& t : tensors) {
    out.segment(at, t.value->size()) = t.value->reshaped();
    at += t.value->size();
  }
  return out;
}

void assign_tensors(const std::vector<NamedTensor>& tensors, const Vector& flat) {
  Eigen::Index n = 0;
  for (const auto& t : tensors) n += t.value->size();
  if (flat.size() != n) throw ShapeMismatch("parameter vector has the wrong length");
  Eigen::Index at = 0;
  for (const auto& t : tensors) {
    t.value->reshaped() = flat.segment(at, t.value->size());
    at += t.value->size();
  }
}

bool is_gain(const std::string& name) {
  return name.size() >= 5 && name.compare(name.size() - 5, 5, "gamma") == 0;
}

LayerNormParams ln_init(int d) { return {Matrix::Ones(1, d), Matrix::Zero(1, d)}; }

BiasMlp mlp_init(std::mt19937_64& rng, int in, int hidden, int heads) {
  return {uniform(rng, hidden, in, 1.0 / std::sqrt(double(in))), Matrix::Zero(hidden, 1),
          Matrix::Zero(heads, hidden), Matrix::Zero(heads, 1)};
}

BlockParams block_init(std::mt19937_64& rng, int d, int hidden) {
  BlockParams b;
  b.ln_attn = ln_init(d);
  b.ffn = {uniform(rng, d, hidden, 1.0 / std::sqrt(double(d))), Matrix::Zero(1, hidden),
           uniform(rng, hidden, d, 1.0 / std::sqrt(double(hidden))), Matrix::Zero(1, d)};
  b.ln_ffn = ln_init(d);
  return b;
}

}  // namespace

GraphParams GraphParams::init(const GraphConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  std::mt19937_64 rng(seed);
  const int d = cfg.model_dim;
  const double bound = 1.0 / std::sqrt(double(d));
  GraphParams p;
  for (int l = 0; l < cfg.layers; ++l) {
    LayerParams layer;
    bool v_target = false;
    bool t_target = false;
    for (auto e : cfg.edge_types) {
      EdgeParams ep;
      ep.wq = uniform(rng, d, d, bound);
      ep.wk = uniform(rng, d, d, bound);
      ep.wv = uniform(rng, d, d, bound);
      ep.wo = uniform(rng, d, d, bound);
      if (cfg.use_spatial_bias) ep.spatial = mlp_init(rng, 4, cfg.bias_hidden, cfg.heads);
      if (cfg.use_phono_bias && e == EdgeType::TT) {
        ep.phono = mlp_init(rng, int(phono::PhonoPairFeatures::kSize), cfg.bias_hidden, cfg.heads);
      }
      if (cfg.use_confidence_gate && source_is_text(e)) {
        ep.gate_w = Matrix::Ones(cfg.heads, 1);
        ep.gate_b = Matrix::Zero(cfg.heads, 1);
      }
      layer.edges.emplace(e, std::move(ep));
      (target_is_text(e) ? t_target : v_target) = true;
    }
    if (v_target) layer.v_block = block_init(rng, d, cfg.ffn_width());
    if (t_target) layer.t_block = block_init(rng, d, cfg.ffn_width());
    p.layers.push_back(std::move(layer));
  }
  p.alpha = Matrix::Constant(1, 1, cfg.residual_init);
  return p;
}

GraphParams GraphParams::random(const GraphConfig& cfg, std::uint64_t seed, double scale) {
  auto p = init(cfg, seed);
  std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
  for (auto& t : p.tensors()) {
    *t.value = uniform(rng, t.value->rows(), t.value->cols(), scale);
    if (is_gain(t.name)) t.value->array() += 1.0;
  }
  return p;
}

GraphParams GraphParams::zeros_like() const {
  GraphParams z = *this;
  for (auto& t : z.tensors()) t.value->setZero();
  return z;
}

std::vector<NamedTensor> GraphParams::tensors() {
  std::vector<NamedTensor> out;
  graph_tensors<GraphParams, NamedTensor, Matrix*>(*this, out);
  return out;
}

std::vector<ConstNamedTensor> GraphParams::tensors() const {
  std::vector<ConstNamedTensor> out;
  graph_tensors<const GraphParams, ConstNamedTensor, const Matrix*>(*this, out);
  return out;
}

std::size_t GraphParams::parameter_count() const {
  std::size_t n = 0;
  for (const auto& t : tensors()) n += static_cast<std::size_t>(t.value->size());
  return n;
}

Vector GraphParams::flatten() const { return flatten_tensors(tensors()); }
void GraphParams::assign(const Vector& flat) { assign_tensors(tensors(), flat); }

std::size_t phono_bias_parameter_count(const LayerParams& layer) {
  std::size_t n = 0;
  for (const auto& [e, ep] : layer.edges) {
    if (ep.phono) n += ep.phono->parameter_count();
  }
  return n;
}

std::size_t phono_bias_parameter_count(const GraphConfig& cfg) {
  auto c = cfg;
  c.layers = 1;
  return phono_bias_parameter_count(GraphParams::init(c, 0).layers.front());
}

// ---- primitives ------------------------------------------------------------

Matrix scaled_dot_product(const Matrix& q_head, const Matrix& k_head) {
  if (q_head.cols() != k_head.cols()) throw DimensionMismatch("query/key widths differ");
  const double scale = 1.0 / std::sqrt(static_cast<double>(q_head.cols()));
  return (q_head * k_head.transpose()) * scale;
}

Matrix softmax_rows(const Matrix& scores) {
  Matrix out(scores.rows(), scores.cols());
  for (Eigen::Index i = 0; i < scores.rows(); ++i) {
    const double m = scores.row(i).maxCoeff();
    out.row(i) = (scores.row(i).array() - m).exp();
    out.row(i) /= out.row(i).sum();
  }
  return out;
}

namespace detail {

Matrix bias_mlp_forward(const BiasMlp& mlp, const Matrix& features, MlpCache* cache) {
  if (features.cols() != mlp.w1.cols()) throw DimensionMismatch("bias features have wrong width");
  Matrix z = features * mlp.w1.transpose();
  z.rowwise() += mlp.b1.transpose().row(0);
  Matrix hidden = z.cwiseMax(0.0);
  Matrix out = hidden * mlp.w2.transpose();
  out.rowwise() += mlp.b2.transpose().row(0);
  if (cache) {
    cache->z = std::move(z);
    cache->hidden = std::move(hidden);
  }
  return out;
}

void bias_mlp_backward(const BiasMlp& mlp, const Matrix& features, const MlpCache& cache,
                       const Matrix& d_out, BiasMlp& grad) {
  grad.w2 += d_out.transpose() * cache.hidden;
  grad.b2 += d_out.colwise().sum().transpose();
  Matrix dz = d_out * mlp.w2;
  dz.array() *= (cache.z.array() > 0.0).cast<double>();
  grad.w1 += dz.transpose() * features;
  grad.b1 += dz.colwise().sum().transpose();
}

Matrix layer_norm_forward(const Matrix& x, const LayerNormParams& p, LayerNormCache* cache) {
  const auto d = static_cast<double>(x.cols());
  Matrix xhat(x.rows(), x.cols());
  Vector inv_std(x.rows());
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const double mu = x.row(i).sum() / d;
    const auto centered = (x.row(i).array() - mu).matrix();
    const double var = centered.squaredNorm() / d;
    inv_std(i) = 1.0 / std::sqrt(var + kLayerNormEps);
    xhat.row(i) = centered * inv_std(i);
  }
  Matrix y = xhat.array().rowwise() * p.gamma.row(0).array();
  y.rowwise() += p.beta.row(0);
  if (cache) {
    cache->xhat = std::move(xhat);
    cache->inv_std = std::move(inv_std);
  }
  return y;
}

Matrix layer_norm_backward(const Matrix& dy, const LayerNormParams& p, const LayerNormCache& cache,
                           LayerNormParams& grad) {
  grad.gamma += (dy.array() * cache.xhat.array()).colwise().sum().matrix();
  grad.beta += dy.colwise().sum();
  const Matrix dxhat = dy.array().rowwise() * p.gamma.row(0).array();
  const auto d = static_cast<double>(dy.cols());
  Matrix dx(dy.rows(), dy.cols());
  for (Eigen::Index i = 0; i < dy.rows(); ++i) {
    const double mean_d = dxhat.row(i).sum() / d;
    const double mean_dx = dxhat.row(i).dot(cache.xhat.row(i)) / d;
    dx.row(i) = (dxhat.row(i).array() - mean_d - cache.xhat.row(i).array() * mean_dx).matrix() *
                cache.inv_std(i);
  }
  return dx;
}

}  // namespace detail

Matrix bias_mlp_forward(const BiasMlp& mlp, const Matrix& features) {
  return detail::bias_mlp_forward(mlp, features, nullptr);
}

Matrix layer_norm(const Matrix& x, const LayerNormParams& p) {
  return detail::layer_norm_forward(x, p, nullptr);
}

Matrix spatial_pair_features(std::span<const BoundingBox> queries,
                             std::span<const BoundingBox> keys) {
  Matrix out(static_cast<Eigen::Index>(queries.size() * keys.size()), 4);
  for (std::size_t i = 0; i < queries.size(); ++i) {
    for (std::size_t j = 0; j < keys.size(); ++j) {
      out.row(static_cast<Eigen::Index>(i * keys.size() + j)) =
          spatial_features(queries[i], keys[j]).transpose();
    }
  }
  return out;
}

Matrix phono_pair_features(const phono::PhonoTensor& tensor) {
  const auto n = tensor.token_count();
  Matrix out(static_cast<Eigen::Index>(n * n), static_cast<Eigen::Index>(phono::PhonoPairFeatures::kSize));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const auto v = tensor.at(i, j).as_vector();
      for (std::size_t k = 0; k < v.size(); ++k) {
        out(static_cast<Eigen::Index>(i * n + j), static_cast<Eigen::Index>(k)) = v[k];
      }
    }
  }
  return out;
}

std::vector<Matrix> attention_scores(const Matrix& q, const Matrix& k, int heads,
                                     const BiasMlp* spatial_mlp, const Matrix* spatial_features,
                                     const BiasMlp* phono_mlp, const Matrix* phono_features) {
  if (heads < 1 || q.cols() != k.cols() || q.cols() % heads != 0) {
    throw DimensionMismatch("query/key widths must match and divide into heads");
  }
  const auto pairs = q.rows() * k.rows();
  const Eigen::Index dh = q.cols() / heads;
  Matrix sp;
  Matrix ph;
  if (spatial_mlp && spatial_features) {
    if (spatial_features->rows() != pairs) throw DimensionMismatch("spatial pair count");
    sp = bias_mlp_forward(*spatial_mlp, *spatial_features);
  }
  if (phono_mlp && phono_features) {
    if (phono_features->rows() != pairs) throw DimensionMismatch("phonological pair count");
    ph = bias_mlp_forward(*phono_mlp, *phono_features);
  }
  if ((sp.size() && sp.cols() != heads) || (ph.size() && ph.cols() != heads)) {
    throw DimensionMismatch("bias perceptron output count differs from heads");
  }
  std::vector<Matrix> out;
  for (int h = 0; h < heads; ++h) {
    Matrix s = scaled_dot_product(q.middleCols(h * dh, dh), k.middleCols(h * dh, dh));
    if (sp.size()) s += sp.col(h).reshaped<Eigen::RowMajor>(q.rows(), k.rows());
    if (ph.size()) s += ph.col(h).reshaped<Eigen::RowMajor>(q.rows(), k.rows());
    out.push_back(std::move(s));
  }
  return out;
}

Matrix confidence_gate(const Matrix& attention, std::span<const double> confidences, double w,
                       double b) {
  if (static_cast<std::size_t>(attention.cols()) != confidences.size()) {
    throw DimensionMismatch("one confidence per key is required");
  }
  Matrix out = attention;
  for (Eigen::Index j = 0; j < out.cols(); ++j) {
    out.col(j) *= sigmoid(w * confidences[static_cast<std::size_t>(j)] + b);
  }
  return out;
}

Matrix residual_preserve(const Matrix& pre_graph, const Matrix& post_graph, double alpha) {
  if (pre_graph.rows() != post_graph.rows() || pre_graph.cols() != post_graph.cols()) {
    throw ShapeMismatch("residual inputs differ in shape");
  }
  return post_graph + sigmoid(alpha) * pre_graph;
}

// ---- dual-stream fusion ----------------------------------------------------

namespace {

template <typename Params, typename Out, typename Ptr>
void fuse_tensors(Params& p, std::vector<Out>& out) {
  auto add = [&out](std::string name, Ptr m) { out.push_back({std::move(name), m}); };
  add("w_vis", &p.w_vis);
  add("ln_vis.gamma", &p.ln_vis.gamma);
  add("ln_vis.beta", &p.ln_vis.beta);
  add("w_pho", &p.w_pho);
  add("ln_pho.gamma", &p.ln_pho.gamma);
  add("ln_pho.beta", &p.ln_pho.beta);
  add("w_g", &p.w_g);
  add("b_g", &p.b_g);
}

Matrix unit_rows(const Matrix& m, const char* what) {
  Matrix out = m;
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    const double n = m.row(i).norm();
    if (n == 0.0) {
      throw ZeroVector(std::string(what) + " row " + std::to_string(i) + " has zero norm");
    }
    out.row(i) /= n;
  }
  return out;
}

struct FuseCache {
  Matrix x_vis;
  LayerNormCache ln_vis;
  LayerNormCache ln_pho;
  Matrix v_vis;
  Matrix v_pho;
  Matrix gate;
};

FuseOutput fuse_forward(const DualStreamInput& in, const FuseParams& p, FuseCache* cache) {
  const auto n = in.recognition.rows();
  if (in.detection.rows() != n || in.linguistic.rows() != n) {
    throw DimensionMismatch("dual-stream inputs have different row counts");
  }
  if (in.recognition.cols() + in.detection.cols() != p.w_vis.rows() ||
      in.linguistic.cols() != p.w_pho.rows()) {
    throw DimensionMismatch("dual-stream input widths do not match the parameters");
  }
  Matrix x(n, in.recognition.cols() + in.detection.cols());
  x << unit_rows(in.recognition, "recognition"), unit_rows(in.detection, "detection");
  LayerNormCache lv;
  LayerNormCache lp;
  Matrix v_vis = detail::layer_norm_forward(x * p.w_vis, p.ln_vis, &lv);
  Matrix v_pho = detail::layer_norm_forward(in.linguistic * p.w_pho, p.ln_pho, &lp);
  Matrix cat(n, 2 * v_vis.cols());
  cat << v_vis, v_pho;
  Matrix u = cat * p.w_g;
  u.rowwise() += p.b_g.row(0);
  Matrix g = u.unaryExpr([](double z) { return sigmoid(z); });
  FuseOutput out;
  out.fused = g.cwiseProduct(v_vis) + (1.0 - g.array()).matrix().cwiseProduct(v_pho);
  out.visual = v_vis;
  out.linguistic = v_pho;
  out.gate = g;
  if (cache) {
    cache->x_vis = std::move(x);
    cache->ln_vis = std::move(lv);
    cache->ln_pho = std::move(lp);
    cache->v_vis = std::move(v_vis);
    cache->v_pho = std::move(v_pho);
    cache->gate = std::move(g);
  }
  return out;
}

}  // namespace

FuseParams FuseParams::init(const FuseConfig& cfg, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const int vis_in = cfg.recognition_dim + cfg.detection_dim;
  const int d = cfg.model_dim;
  FuseParams p;
  p.w_vis = uniform(rng, vis_in, d, 1.0 / std::sqrt(double(vis_in)));
  p.ln_vis = ln_init(d);
  p.w_pho = uniform(rng, cfg.linguistic_dim, d, 1.0 / std::sqrt(double(cfg.linguistic_dim)));
  p.ln_pho = ln_init(d);
  p.w_g = uniform(rng, 2 * d, d, 1.0 / std::sqrt(double(2 * d)));
  p.b_g = Matrix::Zero(1, d);
  return p;
}

FuseParams FuseParams::random(const FuseConfig& cfg, std::uint64_t seed, double scale) {
  auto p = init(cfg, seed);
  std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
  for (auto& t : p.tensors()) {
    *t.value = uniform(rng, t.value->rows(), t.value->cols(), scale);
    if (is_gain(t.name)) t.value->array() += 1.0;
  }
  return p;
}

FuseParams FuseParams::zeros_like() const {
  FuseParams z = *this;
  for (auto& t : z.tensors()) t.value->setZero();
  return z;
}

std::vector<NamedTensor> FuseParams::tensors() {
  std::vector<NamedTensor> out;
  fuse_tensors<FuseParams, NamedTensor, Matrix*>(*this, out);
  return out;
}

std::vector<ConstNamedTensor> FuseParams::tensors() const {
  std::vector<ConstNamedTensor> out;
  fuse_tensors<const FuseParams, ConstNamedTensor, const Matrix*>(*this, out);
  return out;
}

Vector FuseParams::flatten() const { return flatten_tensors(tensors()); }
void FuseParams::assign(const Vector& flat) { assign_tensors(tensors(), flat); }

FuseOutput dual_stream_fuse(const DualStreamInput& input, const FuseParams& params) {
  return fuse_forward(input, params, nullptr);
}

FuseParams dual_stream_backward(const DualStreamInput& input, const FuseParams& params,
                                const Matrix& upstream) {
  FuseCache c;
  fuse_forward(input, params, &c);
  if (upstream.rows() != c.gate.rows() || upstream.cols() != c.gate.cols()) {
    throw ShapeMismatch("upstream gradient shape differs from the fused output");
  }
  FuseParams grad = params.zeros_like();
  const Matrix& g = c.gate;
  const Matrix dg = upstream.cwiseProduct(c.v_vis - c.v_pho);
  Matrix dv_vis = upstream.cwiseProduct(g);
  Matrix dv_pho = upstream.cwiseProduct((1.0 - g.array()).matrix());
  const Matrix du = dg.array() * g.array() * (1.0 - g.array());
  Matrix cat(g.rows(), 2 * g.cols());
  cat << c.v_vis, c.v_pho;
  grad.w_g = cat.transpose() * du;
  grad.b_g = du.colwise().sum();
  const Matrix dcat = du * params.w_g.transpose();
  dv_vis += dcat.leftCols(g.cols());
  dv_pho += dcat.rightCols(g.cols());
  const Matrix da_vis = detail::layer_norm_backward(dv_vis, params.ln_vis, c.ln_vis, grad.ln_vis);
  const Matrix da_pho = detail::layer_norm_backward(dv_pho, params.ln_pho, c.ln_pho, grad.ln_pho);
  grad.w_vis = c.x_vis.transpose() * da_vis;
  grad.w_pho = input.linguistic.transpose() * da_pho;
  return grad;
}

// ---- copy mixture ----------------------------------------------------------

namespace {

void check_distribution(const Vector& p, const char* what) {
  if (p.size() == 0) throw NotADistribution(std::string(what) + " is empty");
  if (!p.allFinite() || (p.array() < 0.0).any()) {
    throw NotADistribution(std::string(what) + " has negative or non-finite entries");
  }
  if (std::abs(p.sum() - 1.0) > 1e-9) {
    throw NotADistribution(std::string(what) + " does not sum to 1");
  }
}

}  // namespace

Vector copy_mixture(const Vector& p_vocab, const Vector& p_ocr, double p_copy) {
  check_distribution(p_vocab, "vocabulary distribution");
  check_distribution(p_ocr, "OCR distribution");
  if (!(p_copy >= 0.0 && p_copy <= 1.0)) throw NotADistribution("p_copy must lie in [0, 1]");
  Vector out(p_vocab.size() + p_ocr.size());
  out << (1.0 - p_copy) * p_vocab, p_copy * p_ocr;
  return out;
}

// ---- stub embeddings -------------------------------------------------------

Matrix stub_embedding(std::span<const std::string> tokens, int dim, std::uint64_t seed) {
  Matrix out(static_cast<Eigen::Index>(tokens.size()), dim);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    // FNV-1a, so the mapping does not depend on the standard library.
    std::uint64_t h = 0xcbf29ce484222325ULL ^ seed;
    for (unsigned char ch : tokens[i]) {
      h ^= ch;
      h *= 0x100000001b3ULL;
    }
    std::mt19937_64 rng(h);
    for (int k = 0; k < dim; ++k) out(static_cast<Eigen::Index>(i), k) = dist(rng);
  }
  return out;
}

NodeSet random_instance(int n_visual, int n_text, int model_dim, std::uint64_t seed,
                        std::span<const std::string> tokens) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> pos(0.1, 0.9);
  std::uniform_real_distribution<double> ext(0.05, 0.3);
  std::uniform_real_distribution<double> conf(0.05, 1.0);
  NodeSet n;
  n.v_features = uniform(rng, n_visual, model_dim, 1.0);
  n.t_features = uniform(rng, n_text, model_dim, 1.0);
  for (int i = 0; i < n_visual; ++i) n.v_boxes.push_back({pos(rng), pos(rng), ext(rng), ext(rng)});
  for (int i = 0; i < n_text; ++i) {
    n.t_boxes.push_back({pos(rng), pos(rng), ext(rng), ext(rng)});
    n.confidences.push_back(conf(rng));
  }
  if (!tokens.empty()) {
    if (tokens.size() != static_cast<std::size_t>(n_text)) {
      throw DimensionMismatch("token count differs from text node count");
    }
    n.phono = phono::build_tensor(tokens);
  }
  return n;
}

}  // namespace vnscene::fusion
