#pragma once

#include <functional>
#include <string>
#include <vector>

#include "ecoscale/layers.hpp"

namespace ecoscale {

// Central-difference gradient verification. The caller runs one analytic
// backward pass to populate gradients, then hands over a loss closure that
// recomputes the scalar loss from the current parameter values.
struct GradCheckReport {
    double max_rel_err = 0.0;
    std::string worst_name;
    int worst_index = -1;
    double analytic = 0.0;
    double numeric = 0.0;
    int checked = 0;
};

// Relative error |a - n| / max(1, |a|, |n|).
double grad_rel_err(double analytic, double numeric);

// Sweep every trainable parameter (every `stride`-th element) with central
// differences of half-width eps. Parameters are perturbed in place and
// restored; the registry's grad buffers are read, never written.
GradCheckReport check_param_grads(const std::function<double()>& loss, ParamRegistry& registry,
                                  double eps = 1e-5, int stride = 1);

// Same sweep over an input buffer against its analytic gradient.
GradCheckReport check_buffer_grad(const std::function<double()>& loss, std::vector<double>& buffer,
                                  const std::vector<double>& analytic_grad,
                                  const std::string& buffer_name, double eps = 1e-5,
                                  int stride = 1);

}  // namespace ecoscale
