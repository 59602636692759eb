#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>

#include "vnscene/fusion_kernel.hpp"

using namespace vnscene;
using namespace vnscene::fusion;

namespace {

GraphConfig small_config(int layers = 1) {
  GraphConfig c;
  c.layers = layers;
  c.heads = 2;
  c.model_dim = 8;
  c.bias_hidden = 6;
  return c;
}

const std::vector<std::string> kTokens = {"Trường", "Trương", "ma", "mạ", "shop", "bán"};

NodeSet instance(int nv, int nt, int d, std::uint64_t seed) {
  const std::vector<std::string> toks(kTokens.begin(), kTokens.begin() + nt);
  return random_instance(nv, nt, d, seed, toks);
}

double sig(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// Straightforward loop evaluation of a bias perceptron on one feature row.
std::vector<double> mlp_oracle(const BiasMlp& m, const std::vector<double>& f) {
  std::vector<double> hidden(std::size_t(m.w1.rows()));
  for (Eigen::Index r = 0; r < m.w1.rows(); ++r) {
    double s = m.b1(r, 0);
    for (Eigen::Index c = 0; c < m.w1.cols(); ++c) s += m.w1(r, c) * f[std::size_t(c)];
    hidden[std::size_t(r)] = s > 0.0 ? s : 0.0;
  }
  std::vector<double> out(std::size_t(m.w2.rows()));
  for (Eigen::Index h = 0; h < m.w2.rows(); ++h) {
    double s = m.b2(h, 0);
    for (Eigen::Index r = 0; r < m.w2.cols(); ++r) s += m.w2(h, r) * hidden[std::size_t(r)];
    out[std::size_t(h)] = s;
  }
  return out;
}

std::vector<double> ln_oracle(const std::vector<double>& x, const LayerNormParams& p) {
  double mean = 0.0;
  for (double v : x) mean += v;
  mean /= double(x.size());
  double var = 0.0;
  for (double v : x) var += (v - mean) * (v - mean);
  var /= double(x.size());
  std::vector<double> out(x.size());
  for (std::size_t k = 0; k < x.size(); ++k) {
    out[k] = (x[k] - mean) / std::sqrt(var + 1e-5) * p.gamma(0, Eigen::Index(k)) +
             p.beta(0, Eigen::Index(k));
  }
  return out;
}

using Rows = std::vector<std::vector<double>>;

Rows rows_of(const Matrix& m) {
  Rows r(std::size_t(m.rows()), std::vector<double>(std::size_t(m.cols())));
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) r[std::size_t(i)][std::size_t(j)] = m(i, j);
  }
  return r;
}

Rows matmul(const Rows& a, const Matrix& w) {
  Rows out(a.size(), std::vector<double>(std::size_t(w.cols()), 0.0));
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (Eigen::Index j = 0; j < w.cols(); ++j) {
      for (Eigen::Index k = 0; k < w.rows(); ++k) {
        out[i][std::size_t(j)] += a[i][std::size_t(k)] * w(k, j);
      }
    }
  }
  return out;
}

// Per-head attention of one edge type, loop by loop.
Rows edge_oracle(const NodeSet& n, const GraphConfig& cfg, EdgeType e, const EdgeParams& p,
                 std::vector<Rows>* scores_out = nullptr) {
  const bool tq = target_is_text(e);
  const bool tk = source_is_text(e);
  const Rows xq = rows_of(tq ? n.t_features : n.v_features);
  const Rows xk = rows_of(tk ? n.t_features : n.v_features);
  const auto& bq = tq ? n.t_boxes : n.v_boxes;
  const auto& bk = tk ? n.t_boxes : n.v_boxes;
  const Rows q = matmul(xq, p.wq), k = matmul(xk, p.wk), v = matmul(xk, p.wv);
  const int dh = cfg.head_dim();
  Rows concat(xq.size(), std::vector<double>(std::size_t(cfg.model_dim), 0.0));
  for (int h = 0; h < cfg.heads; ++h) {
    Rows s(xq.size(), std::vector<double>(xk.size()));
    for (std::size_t i = 0; i < xq.size(); ++i) {
      for (std::size_t j = 0; j < xk.size(); ++j) {
        double dot = 0.0;
        for (int c = h * dh; c < (h + 1) * dh; ++c) dot += q[i][std::size_t(c)] * k[j][std::size_t(c)];
        double val = dot / std::sqrt(double(dh));
        if (cfg.use_spatial_bias && p.spatial) {
          const auto& a = bq[i];
          const auto& b = bk[j];
          const std::vector<double> f = {(b.cx - a.cx) / a.w, (b.cy - a.cy) / a.h,
                                         std::log(b.w / a.w), std::log(b.h / a.h)};
          val += mlp_oracle(*p.spatial, f)[std::size_t(h)];
        }
        if (cfg.use_phono_bias && p.phono && e == EdgeType::TT && n.phono) {
          const auto fv = n.phono->at(i, j).as_vector();
          val += mlp_oracle(*p.phono, std::vector<double>(fv.begin(), fv.end()))[std::size_t(h)];
        }
        s[i][j] = val;
      }
    }
    if (scores_out) scores_out->push_back(s);
    for (std::size_t i = 0; i < xq.size(); ++i) {
      double mx = -std::numeric_limits<double>::infinity();
      for (double x : s[i]) mx = std::max(mx, x);
      double z = 0.0;
      for (double x : s[i]) z += std::exp(x - mx);
      for (std::size_t j = 0; j < xk.size(); ++j) {
        double w = std::exp(s[i][j] - mx) / z;
        if (cfg.use_confidence_gate && tk && p.gate_w) {
          w *= sig((*p.gate_w)(h, 0) * n.confidences[j] + (*p.gate_b)(h, 0));
        }
        for (int c = h * dh; c < (h + 1) * dh; ++c) concat[i][std::size_t(c)] += w * v[j][std::size_t(c)];
      }
    }
  }
  return matmul(concat, p.wo);
}

Rows block_oracle(const Rows& x, const Rows& m, const BlockParams& p) {
  Rows out;
  for (std::size_t i = 0; i < x.size(); ++i) {
    std::vector<double> s(x[i].size());
    for (std::size_t k = 0; k < s.size(); ++k) s[k] = x[i][k] + m[i][k];
    const auto h = ln_oracle(s, p.ln_attn);
    const auto z = matmul(Rows{h}, p.ffn.w1)[0];
    std::vector<double> r(z.size());
    for (std::size_t k = 0; k < z.size(); ++k) r[k] = std::max(0.0, z[k] + p.ffn.b1(0, Eigen::Index(k)));
    const auto f = matmul(Rows{r}, p.ffn.w2)[0];
    std::vector<double> s2(h.size());
    for (std::size_t k = 0; k < h.size(); ++k) s2[k] = h[k] + f[k] + p.ffn.b2(0, Eigen::Index(k));
    out.push_back(ln_oracle(s2, p.ln_ffn));
  }
  return out;
}

void check_close(const Matrix& m, const Rows& r, double tol) {
  REQUIRE(std::size_t(m.rows()) == r.size());
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      CHECK(m(i, j) == doctest::Approx(r[std::size_t(i)][std::size_t(j)]).epsilon(tol));
    }
  }
}

}  // namespace

TEST_CASE("spatial features") {
  const BoundingBox a{1, 1, 2, 2};
  const BoundingBox b{2, 3, 4, 1};
  const auto f = spatial_features(a, b);
  CHECK(f(0) == 0.5);
  CHECK(f(1) == 1.0);
  CHECK(f(2) == doctest::Approx(std::log(2.0)));
  CHECK(f(3) == doctest::Approx(std::log(0.5)));
  CHECK(spatial_features(a, a).isZero(0.0));
  const auto g = spatial_features(b, a);
  // Swapping negates the offsets measured in the other box's units, and the logs.
  CHECK(g(0) == doctest::Approx(-1.0 / 4.0));
  CHECK(g(1) == doctest::Approx(-2.0 / 1.0));
  CHECK(g(2) == doctest::Approx(-f(2)));
  CHECK(g(3) == doctest::Approx(-f(3)));
  CHECK_THROWS_AS(spatial_features(a, BoundingBox{0, 0, 0, 1}), DegenerateBox);
  CHECK_THROWS_AS(spatial_features(BoundingBox{0, 0, 1, -1}, a), DegenerateBox);
}

TEST_CASE("config") {
  CHECK(GraphConfig::full_scale().model_dim == 768);
  CHECK(GraphConfig::full_scale().heads == 8);
  CHECK(GraphConfig::desk_scale().model_dim == 32);
  CHECK(GraphConfig::desk_scale().heads == 4);
  GraphConfig bad;
  bad.model_dim = 30;
  CHECK_THROWS_AS(bad.validate(), DimensionMismatch);
  bad = GraphConfig{};
  bad.layers = 0;
  CHECK_THROWS_AS(bad.validate(), DimensionMismatch);
  auto cfg = small_config(2);
  cfg.edge_types = {EdgeType::TT};
  cfg.use_confidence_gate = false;
  const auto back = GraphConfig::from_json_text(cfg.to_json_text());
  CHECK(back.edge_types == cfg.edge_types);
  CHECK(back.layers == 2);
  CHECK(back.model_dim == 8);
  CHECK_FALSE(back.use_confidence_gate);
  CHECK_THROWS(GraphConfig::from_json_text(R"({"layerz": 2})"));
  CHECK_THROWS(GraphConfig::from_json_text(R"({"edge_types": ["X->Y"]})"));
  CHECK(parse_edge_type("T->T") == EdgeType::TT);
}

TEST_CASE("phono bias parameters: 552 per layer at H = 8") {
  GraphConfig cfg;
  cfg.heads = 8;
  cfg.model_dim = 64;
  CHECK(phono_bias_parameter_count(cfg) == 552);
  const auto p = GraphParams::init(cfg, 1);
  for (const auto& layer : p.layers) CHECK(phono_bias_parameter_count(layer) == 552);
  CHECK(8 * 32 + 32 + 8 * (32 + 1) == 552);
  cfg.use_phono_bias = false;
  CHECK(phono_bias_parameter_count(GraphParams::init(cfg, 1).layers[0]) == 0);
}

TEST_CASE("parameter containers") {
  const auto cfg = small_config(2);
  auto p = GraphParams::random(cfg, 9);
  const auto flat = p.flatten();
  CHECK(std::size_t(flat.size()) == p.parameter_count());
  std::size_t total = 0;
  for (const auto& t : p.tensors()) total += std::size_t(t.value->size());
  CHECK(total == p.parameter_count());
  auto z = p.zeros_like();
  CHECK(z.flatten().isZero(0.0));
  z.assign(flat);
  CHECK(z.flatten() == flat);
  CHECK_THROWS(z.assign(Vector::Zero(3)));
  // Initialisation: neutral bias outputs, unit gain, gate (1, 0), alpha 0.5.
  const auto init = GraphParams::init(cfg, 9);
  const auto& tt = init.layers[0].edges.at(EdgeType::TT);
  CHECK(tt.phono->w2.isZero(0.0));
  CHECK(tt.phono->b2.isZero(0.0));
  CHECK(tt.spatial->b1.isZero(0.0));
  CHECK(tt.gate_w->isOnes(0.0));
  CHECK(tt.gate_b->isZero(0.0));
  CHECK_FALSE(init.layers[0].edges.at(EdgeType::VT).gate_w.has_value());
  CHECK(init.layers[0].t_block->ln_attn.gamma.isOnes(0.0));
  CHECK(init.alpha(0, 0) == 0.5);
  CHECK(GraphParams::init(cfg, 9).flatten() == init.flatten());
}

TEST_CASE("zero bias weights reduce to plain scaled dot-product, bitwise") {
  const auto cfg = small_config();
  const auto n = instance(0, 5, cfg.model_dim, 4);
  const auto p = GraphParams::init(cfg, 4);
  const auto& e = p.layers[0].edges.at(EdgeType::TT);
  const Matrix q = n.t_features * e.wq;
  const Matrix k = n.t_features * e.wk;
  const Matrix sp = spatial_pair_features(n.t_boxes, n.t_boxes);
  const Matrix ph = phono_pair_features(*n.phono);
  const auto biased = attention_scores(q, k, cfg.heads, &*e.spatial, &sp, &*e.phono, &ph);
  const auto plain = attention_scores(q, k, cfg.heads, nullptr, nullptr, nullptr, nullptr);
  const int dh = cfg.head_dim();
  for (int h = 0; h < cfg.heads; ++h) {
    const Matrix ref = scaled_dot_product(q.middleCols(h * dh, dh), k.middleCols(h * dh, dh));
    CHECK((biased[std::size_t(h)].array() == ref.array()).all());
    CHECK((plain[std::size_t(h)].array() == ref.array()).all());
  }
}

TEST_CASE("all-zero phono tensor matches the spatial-only scores") {
  const auto cfg = small_config();
  auto n = instance(0, 4, cfg.model_dim, 8);
  n.phono = phono::PhonoTensor(4);
  auto p = GraphParams::random(cfg, 8);
  auto& e = p.layers[0].edges.at(EdgeType::TT);
  e.phono->b1.setZero();
  e.phono->b2.setZero();
  const Matrix q = n.t_features * e.wq;
  const Matrix k = n.t_features * e.wk;
  const Matrix sp = spatial_pair_features(n.t_boxes, n.t_boxes);
  const Matrix ph = phono_pair_features(*n.phono);
  const auto both = attention_scores(q, k, cfg.heads, &*e.spatial, &sp, &*e.phono, &ph);
  const auto spatial = attention_scores(q, k, cfg.heads, &*e.spatial, &sp, nullptr, nullptr);
  for (int h = 0; h < cfg.heads; ++h) CHECK(both[std::size_t(h)] == spatial[std::size_t(h)]);
}

TEST_CASE("attention scores match a loop evaluation") {
  const auto cfg = small_config();
  const auto n = instance(0, 3, cfg.model_dim, 21);
  const auto p = GraphParams::random(cfg, 21);
  const auto& e = p.layers[0].edges.at(EdgeType::TT);
  std::vector<Rows> expected;
  edge_oracle(n, cfg, EdgeType::TT, e, &expected);
  const auto out = graph_layer(n, cfg, p.layers[0]);
  for (const auto& tr : out.traces) {
    if (tr.edge != EdgeType::TT) continue;
    for (int h = 0; h < cfg.heads; ++h) check_close(tr.scores[std::size_t(h)], expected[std::size_t(h)], 1e-12);
  }
  CHECK_THROWS_AS(attention_scores(n.t_features, Matrix::Zero(3, 5), cfg.heads, nullptr, nullptr,
                                   nullptr, nullptr),
                  DimensionMismatch);
}

TEST_CASE("softmax rows sum to one") {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(-50.0, 50.0);
  for (int t = 0; t < 50; ++t) {
    const Matrix s = Matrix::NullaryExpr(1 + rng() % 7, 1 + rng() % 9, [&] { return u(rng); });
    const Matrix a = softmax_rows(s);
    for (Eigen::Index i = 0; i < a.rows(); ++i) CHECK(std::abs(a.row(i).sum() - 1.0) <= 1e-9);
    CHECK((a.array() >= 0.0).all());
  }
}

TEST_CASE("confidence gate") {
  const Matrix a = softmax_rows((Matrix(2, 3) << 0.1, 0.5, -1.0, 2.0, 0.0, 0.3).finished());
  const std::vector<double> c = {0.2, 0.9, 0.5};
  CHECK(confidence_gate(a, c, 0.0, 50.0).isApprox(a, 1e-15));
  CHECK(confidence_gate(a, c, 0.0, -50.0).cwiseAbs().maxCoeff() < 1e-20);
  const std::vector<double> half = {0.5, 0.5, 0.5};
  CHECK(confidence_gate(a, half, 1.0, 0.0).isApprox(a * sig(0.5), 1e-15));
  // Rows are left sub-stochastic.
  const Matrix g = confidence_gate(a, c, 1.0, 0.0);
  for (Eigen::Index i = 0; i < g.rows(); ++i) CHECK(g.row(i).sum() < 1.0);
}

TEST_CASE("graph layer matches a loop evaluation") {
  auto cfg = small_config();
  const auto n = instance(2, 2, cfg.model_dim, 33);
  const auto p = GraphParams::random(cfg, 33);
  const auto& lp = p.layers[0];
  Rows m_t(2, std::vector<double>(8, 0.0));
  Rows m_v(2, std::vector<double>(8, 0.0));
  for (auto e : kAllEdgeTypes) {
    const auto msg = edge_oracle(n, cfg, e, lp.edges.at(e));
    Rows& m = target_is_text(e) ? m_t : m_v;
    for (std::size_t i = 0; i < m.size(); ++i) {
      for (std::size_t k = 0; k < 8; ++k) m[i][k] += msg[i][k];
    }
  }
  const auto out = graph_layer(n, cfg, lp);
  check_close(out.nodes.t_features, block_oracle(rows_of(n.t_features), m_t, *lp.t_block), 1e-10);
  check_close(out.nodes.v_features, block_oracle(rows_of(n.v_features), m_v, *lp.v_block), 1e-10);

  // graph_forward adds sigmoid(alpha) times the input.
  const auto g = graph_forward(n, cfg, p);
  const double s = sig(p.alpha(0, 0));
  CHECK(g.t_features.isApprox(out.nodes.t_features + s * n.t_features, 1e-14));
}

TEST_CASE("T->T only leaves visual nodes untouched") {
  auto cfg = small_config(3);
  cfg.edge_types = {EdgeType::TT};
  const auto n = instance(3, 4, cfg.model_dim, 12);
  const auto p = GraphParams::random(cfg, 12);
  const auto out = graph_forward(n, cfg, p);
  CHECK((out.v_features.array() == n.v_features.array()).all());
  CHECK_FALSE(out.t_features.isApprox(n.t_features));

  auto full = small_config(3);
  const auto pf = GraphParams::random(full, 12);
  const auto of = graph_forward(n, full, pf);
  CHECK_FALSE(of.v_features.isApprox(n.v_features));
  CHECK_FALSE(of.t_features.isApprox(n.t_features));
}

TEST_CASE("zero value and output projections leave layer norm of the input") {
  const auto cfg = small_config();
  const auto n = instance(2, 3, cfg.model_dim, 14);
  auto p = GraphParams::init(cfg, 14);
  for (auto& [e, ep] : p.layers[0].edges) {
    ep.wv.setZero();
    ep.wo.setZero();
  }
  p.layers[0].t_block->ffn.w2.setZero();
  const auto out = graph_layer(n, cfg, p.layers[0]);
  const Matrix ln = layer_norm(n.t_features, p.layers[0].t_block->ln_attn);
  CHECK(out.nodes.t_features.isApprox(layer_norm(ln, p.layers[0].t_block->ln_ffn), 1e-12));
  CHECK(out.nodes.t_features.isApprox(ln, 1e-4));
}

TEST_CASE("residual") {
  const Matrix pre = Matrix::Constant(2, 3, 1.0);
  const Matrix post = Matrix::Constant(2, 3, 2.0);
  CHECK(sigmoid(0.5) == doctest::Approx(0.6225).epsilon(1e-4));
  CHECK(residual_preserve(pre, post, 0.5)(0, 0) == doctest::Approx(2.0 + sig(0.5)));
  CHECK(residual_preserve(pre, post, -800.0) == post);
  CHECK(residual_preserve(Matrix::Zero(2, 3), post, 3.0) == post);
  CHECK_THROWS_AS(residual_preserve(pre, Matrix::Zero(3, 2), 0.5), ShapeMismatch);

  auto cfg = small_config();
  cfg.residual_enabled = false;
  const auto n = instance(2, 2, cfg.model_dim, 3);
  const auto p = GraphParams::random(cfg, 3);
  const auto out = graph_forward(n, cfg, p);
  CHECK(out.t_features == graph_layer(n, cfg, p.layers[0]).nodes.t_features);
}

TEST_CASE("dual-stream fusion") {
  FuseConfig fc{6, 5, 7, 4};
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  DualStreamInput in;
  in.recognition = Matrix::NullaryExpr(3, 6, [&] { return u(rng); });
  in.detection = Matrix::NullaryExpr(3, 5, [&] { return u(rng); });
  in.linguistic = Matrix::NullaryExpr(3, 7, [&] { return u(rng); });
  auto p = FuseParams::random(fc, 2);
  const auto out = dual_stream_fuse(in, p);
  for (Eigen::Index i = 0; i < 3; ++i) {
    for (Eigen::Index k = 0; k < 4; ++k) {
      const double lo = std::min(out.visual(i, k), out.linguistic(i, k));
      const double hi = std::max(out.visual(i, k), out.linguistic(i, k));
      CHECK(out.fused(i, k) >= lo - 1e-15);
      CHECK(out.fused(i, k) <= hi + 1e-15);
    }
  }
  p.w_g.setZero();
  p.b_g.setConstant(60.0);
  auto sat = dual_stream_fuse(in, p);
  CHECK(sat.fused.isApprox(sat.visual, 1e-12));
  p.b_g.setConstant(-60.0);
  sat = dual_stream_fuse(in, p);
  CHECK(sat.fused.isApprox(sat.linguistic, 1e-12));

  // Scaling a recognition row does not matter: rows are L2-normalized first.
  auto scaled = in;
  scaled.recognition.row(1) *= 7.0;
  CHECK(dual_stream_fuse(scaled, p).fused.isApprox(sat.fused, 1e-12));

  in.detection.row(2).setZero();
  CHECK_THROWS_AS(dual_stream_fuse(in, p), ZeroVector);
}

TEST_CASE("copy mixture") {
  const Vector vocab = Vector::Constant(4, 0.25);
  const Vector ocr = Vector::Constant(2, 0.5);
  const Vector m = copy_mixture(vocab, ocr, 0.3);
  REQUIRE(m.size() == 6);
  for (int i = 0; i < 4; ++i) CHECK(m(i) == doctest::Approx(0.175));
  for (int i = 4; i < 6; ++i) CHECK(m(i) == doctest::Approx(0.15));
  CHECK(std::abs(m.sum() - 1.0) <= 1e-9);
  const Vector z = copy_mixture(vocab, ocr, 0.0);
  CHECK(z.head(4) == vocab);
  CHECK(z.tail(2).isZero(0.0));
  CHECK(copy_mixture(vocab, ocr, 1.0).tail(2) == ocr);
  CHECK_THROWS_AS(copy_mixture(Vector::Constant(4, 0.3), ocr, 0.5), NotADistribution);
  CHECK_THROWS_AS(copy_mixture(vocab, (Vector(2) << 1.5, -0.5).finished(), 0.5), NotADistribution);
  CHECK_THROWS(copy_mixture(vocab, ocr, 1.5));
}

TEST_CASE("stub embeddings are deterministic") {
  const std::vector<std::string> a = {"bán", "hoa", "bán"};
  const Matrix e = stub_embedding(a, 16, 5);
  CHECK(e == stub_embedding(a, 16, 5));
  CHECK(e.row(0) == e.row(2));
  CHECK(e.row(0) != e.row(1));
  CHECK(e != stub_embedding(a, 16, 6));
  CHECK((e.array().abs() <= 1.0).all());
}

TEST_CASE("non-finite inputs are reported") {
  const auto cfg = small_config();
  auto n = instance(1, 2, cfg.model_dim, 1);
  n.t_features(0, 0) = std::numeric_limits<double>::quiet_NaN();
  const auto p = GraphParams::init(cfg, 1);
  const Matrix up_v = Matrix::Ones(1, cfg.model_dim);
  const Matrix up_t = Matrix::Ones(2, cfg.model_dim);
  CHECK_THROWS_AS(gradient_check(n, cfg, p, up_v, up_t), NonFinite);
}

TEST_CASE("node set validation") {
  auto n = instance(1, 2, 8, 1);
  n.confidences.pop_back();
  CHECK_THROWS_AS(n.validate(8), DimensionMismatch);
  n = instance(1, 2, 8, 1);
  n.t_boxes[0].w = 0.0;
  CHECK_THROWS_AS(n.validate(8), DegenerateBox);
}

TEST_CASE("gradient check across bias and gate settings") {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int sp = 0; sp < 2; ++sp) {
    for (int ph = 0; ph < 2; ++ph) {
      for (int gate = 0; gate < 2; ++gate) {
        auto cfg = small_config(2);
        cfg.use_spatial_bias = sp;
        cfg.use_phono_bias = ph;
        cfg.use_confidence_gate = gate;
        const auto n = instance(2, 4, cfg.model_dim, 40 + sp * 4 + ph * 2 + gate);
        // Seed 7 puts a ReLU pre-activation within one step of zero here.
        const auto p = GraphParams::random(cfg, 11);
        const Matrix up_v = Matrix::NullaryExpr(2, cfg.model_dim, [&] { return u(rng); });
        const Matrix up_t = Matrix::NullaryExpr(4, cfg.model_dim, [&] { return u(rng); });
        const auto r = gradient_check(n, cfg, p, up_v, up_t);
        CAPTURE(sp);
        CAPTURE(ph);
        CAPTURE(gate);
        CAPTURE(r.worst.tensor);
        CHECK(r.max_relative_error < 1e-4);
        CHECK(r.parameters_checked == p.parameter_count());
      }
    }
  }
}

TEST_CASE("gradient check near the neutral initialisation") {
  auto cfg = small_config();
  const auto n = instance(1, 3, cfg.model_dim, 2);
  const auto p = GraphParams::init(cfg, 2);
  const Matrix up_v = Matrix::Ones(1, cfg.model_dim);
  const Matrix up_t = Matrix::Ones(3, cfg.model_dim);
  CHECK(gradient_check(n, cfg, p, up_v, up_t).max_relative_error < 1e-4);
}

TEST_CASE("gradient check catches a corrupted gradient") {
  auto cfg = small_config();
  const auto n = instance(2, 3, cfg.model_dim, 6);
  const auto p = GraphParams::random(cfg, 6);
  const Matrix up_v = Matrix::Ones(2, cfg.model_dim);
  const Matrix up_t = Matrix::Ones(3, cfg.model_dim);
  GradientCheckOptions o;
  o.corrupt_scale = 1.1;
  CHECK(gradient_check(n, cfg, p, up_v, up_t, o).max_relative_error > 1e-2);
}

TEST_CASE("gradient check of the dual-stream fusion") {
  FuseConfig fc{6, 5, 7, 4};
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  DualStreamInput in;
  in.recognition = Matrix::NullaryExpr(3, 6, [&] { return u(rng); });
  in.detection = Matrix::NullaryExpr(3, 5, [&] { return u(rng); });
  in.linguistic = Matrix::NullaryExpr(3, 7, [&] { return u(rng); });
  const Matrix up = Matrix::NullaryExpr(3, 4, [&] { return u(rng); });
  const auto p = FuseParams::random(fc, 3);
  CHECK(gradient_check_fuse(in, p, up).max_relative_error < 1e-4);
  GradientCheckOptions o;
  o.corrupt_scale = 0.5;
  CHECK(gradient_check_fuse(in, p, up, o).max_relative_error > 1e-2);
}

TEST_CASE("relative error") {
  CHECK(relative_error(1.0, 1.0, 1e-4) == 0.0);
  CHECK(relative_error(2.0, 1.0, 1e-4) == 0.5);
  CHECK(relative_error(0.0, 1e-9, 1e-4) == doctest::Approx(1e-5));
}
