#pragma once

#include "tbreak/model.hpp"

namespace tbreak {

// sin(x)/x with the removable singularity filled in.
double sinc(double x) noexcept;

// Integral of e^{i k t} over [a, b], written as
// e^{i k (a+b)/2} (b - a) sinc(k (b - a) / 2) so it stays accurate as k -> 0.
Complex phase_integral(double k, double a, double b) noexcept;

// Integral of e^{i k t} p(t) over [a, b] for a lambda time form p.
Complex weighted_phase_integral(const TimeForm& form, double k, double a, double b);

// Integral of e^{i k t} lambda_f(t) over [a, b].
Complex lambda_phase_integral(const LambdaAffine& lambda, double k, double a, double b);

} // namespace tbreak
