#include <algorithm>
#include <cmath>
#include <functional>

#include "fusion_internal.hpp"
#include "vnscene/fusion_kernel.hpp"

namespace vnscene::fusion {

double relative_error(double analytic, double numeric, double floor) {
  const double denom = std::max({std::abs(analytic), std::abs(numeric), floor});
  return std::abs(analytic - numeric) / denom;
}

namespace {

template <typename Params>
GradientCheckReport run_check(Params params, const Params& analytic_grad,
                              const std::function<double(const Params&)>& loss,
                              const GradientCheckOptions& options) {
  GradientCheckReport report;
  const auto grads = analytic_grad.tensors();
  auto tensors = params.tensors();
  for (std::size_t t = 0; t < tensors.size(); ++t) {
    const auto& name = tensors[t].name;
    const Matrix analytic = *grads[t].value * options.corrupt_scale;
    if (!analytic.allFinite()) throw NonFinite("non-finite analytic gradient for " + name);
    double* data = tensors[t].value->data();
    double worst = 0.0;
    for (Eigen::Index k = 0; k < analytic.size(); ++k) {
      const double saved = data[k];
      data[k] = saved + options.step;
      const double up = loss(params);
      data[k] = saved - options.step;
      const double down = loss(params);
      data[k] = saved;
      if (!std::isfinite(up) || !std::isfinite(down)) {
        throw NonFinite("non-finite loss while perturbing " + name);
      }
      const double numeric = (up - down) / (2.0 * options.step);
      const double a = analytic.data()[k];
      const double err = relative_error(a, numeric, options.floor);
      worst = std::max(worst, err);
      ++report.parameters_checked;
      if (report.parameters_checked == 1 || err > report.max_relative_error) {
        report.max_relative_error = err;
        report.worst = {name, static_cast<std::size_t>(k), a, numeric, err};
      }
    }
    report.per_tensor[name] = worst;
  }
  return report;
}

}  // namespace

GradientCheckReport gradient_check(const NodeSet& nodes, const GraphConfig& cfg,
                                   const GraphParams& params, const Matrix& upstream_v,
                                   const Matrix& upstream_t, const GradientCheckOptions& options) {
  const auto grads = graph_backward(nodes, cfg, params, upstream_v, upstream_t);
  auto loss = [&](const GraphParams& p) {
    const auto out = detail::graph_forward_untraced(nodes, cfg, p);
    detail::check_finite(out.v_features, "visual output");
    detail::check_finite(out.t_features, "text output");
    return upstream_v.cwiseProduct(out.v_features).sum() +
           upstream_t.cwiseProduct(out.t_features).sum();
  };
  return run_check<GraphParams>(params, grads.params, loss, options);
}

GradientCheckReport gradient_check_fuse(const DualStreamInput& input, const FuseParams& params,
                                        const Matrix& upstream,
                                        const GradientCheckOptions& options) {
  const auto grads = dual_stream_backward(input, params, upstream);
  auto loss = [&](const FuseParams& p) {
    const auto out = dual_stream_fuse(input, p);
    detail::check_finite(out.fused, "fused output");
    return upstream.cwiseProduct(out.fused).sum();
  };
  return run_check<FuseParams>(params, grads, loss, options);
}

}  // namespace vnscene::fusion
