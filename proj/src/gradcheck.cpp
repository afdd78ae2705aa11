#include "mmaux/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "mmaux/errors.hpp"

namespace mmaux {

std::string GradCheckReport::describe() const {
  std::ostringstream os;
  os << (pass ? "pass" : "FAIL") << ": max rel err " << max_rel_err << " over "
     << coords_checked << " coords";
  if (!worst_param.empty())
    os << " (worst " << worst_param << "[" << worst_index << "], analytic " << worst_analytic
       << " vs numeric " << worst_numeric << ")";
  return os.str();
}

GradCheckReport finite_diff_check(const std::vector<Param*>& params,
                                  const std::function<double(bool with_grad)>& loss_fn,
                                  double eps, double tol) {
  if (!(eps > 0.0 && eps <= 1e-3))
    throw ConfigError("finite_diff_check: eps must be in (0, 1e-3], got " + std::to_string(eps));
  for (Param* p : params) p->reset_grad();
  const double base = loss_fn(true);
  if (!std::isfinite(base)) throw CheckError("finite_diff_check: loss is not finite");

  std::vector<Tensor> analytic;
  analytic.reserve(params.size());
  for (const Param* p : params) analytic.push_back(p->grad);

  GradCheckReport report;
  for (std::size_t pi = 0; pi < params.size(); ++pi) {
    Param& p = *params[pi];
    for (std::size_t i = 0; i < p.value.data.size(); ++i) {
      const double saved = p.value.data[i];
      p.value.data[i] = saved + eps;
      const double up = loss_fn(false);
      p.value.data[i] = saved - eps;
      const double down = loss_fn(false);
      p.value.data[i] = saved;
      if (!std::isfinite(up) || !std::isfinite(down))
        throw CheckError("finite_diff_check: perturbed loss is not finite at " + p.name);
      const double numeric = (up - down) / (2.0 * eps);
      const double a = analytic[pi].data[i];
      const double denom = std::max({std::fabs(a), std::fabs(numeric), 1e-6});
      const double rel = std::fabs(a - numeric) / denom;
      report.coords_checked += 1;
      if (rel > report.max_rel_err) {
        report.max_rel_err = rel;
        report.worst_param = p.name;
        report.worst_index = i;
        report.worst_analytic = a;
        report.worst_numeric = numeric;
      }
    }
  }
  report.pass = report.max_rel_err < tol;
  return report;
}

}  // namespace mmaux
