#include "ecoscale/grad_check.hpp"

#include <cmath>
#include <stdexcept>

namespace ecoscale {

double grad_rel_err(double analytic, double numeric) {
    double denom = 1.0;
    if (std::fabs(analytic) > denom) denom = std::fabs(analytic);
    if (std::fabs(numeric) > denom) denom = std::fabs(numeric);
    return std::fabs(analytic - numeric) / denom;
}

namespace {

void sweep(const std::function<double()>& loss, std::vector<double>& values,
           const std::vector<double>& grads, const std::string& name, double eps, int stride,
           GradCheckReport& report) {
    for (size_t i = 0; i < values.size(); i += static_cast<size_t>(stride)) {
        const double saved = values[i];
        values[i] = saved + eps;
        const double up = loss();
        values[i] = saved - eps;
        const double down = loss();
        values[i] = saved;
        const double numeric = (up - down) / (2.0 * eps);
        const double err = grad_rel_err(grads[i], numeric);
        ++report.checked;
        if (err > report.max_rel_err) {
            report.max_rel_err = err;
            report.worst_name = name;
            report.worst_index = static_cast<int>(i);
            report.analytic = grads[i];
            report.numeric = numeric;
        }
    }
}

}  // namespace

GradCheckReport check_param_grads(const std::function<double()>& loss, ParamRegistry& registry,
                                  double eps, int stride) {
    if (stride < 1) throw std::invalid_argument("grad check: stride must be >= 1");
    GradCheckReport report;
    for (ParamRef& p : registry) {
        if (!p.trainable || !p.grad) continue;
        sweep(loss, *p.value, *p.grad, p.name, eps, stride, report);
    }
    return report;
}

GradCheckReport check_buffer_grad(const std::function<double()>& loss, std::vector<double>& buffer,
                                  const std::vector<double>& analytic_grad,
                                  const std::string& buffer_name, double eps, int stride) {
    if (stride < 1) throw std::invalid_argument("grad check: stride must be >= 1");
    if (buffer.size() != analytic_grad.size())
        throw std::invalid_argument("grad check: buffer/gradient size mismatch");
    GradCheckReport report;
    sweep(loss, buffer, analytic_grad, buffer_name, eps, stride, report);
    return report;
}

}  // namespace ecoscale
