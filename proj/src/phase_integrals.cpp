#include "tbreak/phase_integrals.hpp"

#include <algorithm>
#include <cmath>

namespace tbreak {

namespace {

constexpr Complex kI{0.0, 1.0};

// Moments of e^{i theta s} on [0, 1]: m0 = int e^{i theta s}, m1 = int s e^{i theta s}.
std::pair<Complex, Complex> unit_moments(double theta) {
    if (std::abs(theta) < 0.25) {
        // sum_k (i theta)^k / (k! (k + n + 1)); 16 terms is far below double eps at |theta| < 1/4
        Complex m0{0.0, 0.0};
        Complex m1{0.0, 0.0};
        Complex term{1.0, 0.0};
        for (int k = 0; k < 16; ++k) {
            m0 += term / static_cast<double>(k + 1);
            m1 += term / static_cast<double>(k + 2);
            term *= kI * theta / static_cast<double>(k + 1);
        }
        return {m0, m1};
    }
    const Complex e = std::polar(1.0, theta);
    const Complex m0 = (e - 1.0) / (kI * theta);
    const Complex m1 = e / (kI * theta) + (e - 1.0) / (theta * theta);
    return {m0, m1};
}

// Integral of e^{i k t} (va + (vb - va)(t - a)/(b - a)) over [a, b].
Complex linear_segment(double k, double a, double b, double va, double vb) {
    const double h = b - a;
    const auto [m0, m1] = unit_moments(k * h);
    return std::polar(h, k * a) * (va * m0 + (vb - va) * m1);
}

Complex sampled_integral(const SampledForm& s, double k, double a, double b) {
    const auto& t = s.times;
    const auto& v = s.values;
    Complex total{0.0, 0.0};
    // Held values before and after the table.
    if (a < t.front()) {
        total += v.front() * phase_integral(k, a, std::min(b, t.front()));
    }
    if (b > t.back()) {
        total += v.back() * phase_integral(k, std::max(a, t.back()), b);
    }
    for (std::size_t j = 0; j + 1 < t.size(); ++j) {
        const double lo = std::max(a, t[j]);
        const double hi = std::min(b, t[j + 1]);
        if (!(hi > lo)) continue;
        const double slope = (v[j + 1] - v[j]) / (t[j + 1] - t[j]);
        total += linear_segment(k, lo, hi, v[j] + slope * (lo - t[j]), v[j] + slope * (hi - t[j]));
    }
    return total;
}

} // namespace

double sinc(double x) noexcept {
    return x == 0.0 ? 1.0 : std::sin(x) / x;
}

Complex phase_integral(double k, double a, double b) noexcept {
    const double h = b - a;
    return std::polar(h * sinc(0.5 * k * h), 0.5 * k * (a + b));
}

Complex weighted_phase_integral(const TimeForm& form, double k, double a, double b) {
    if (const auto* c = std::get_if<ConstantForm>(&form)) {
        return c->value * phase_integral(k, a, b);
    }
    if (const auto* s = std::get_if<SinusoidForm>(&form)) {
        // sin(W t) = (e^{i W t} - e^{-i W t}) / 2i
        const Complex plus = phase_integral(k + s->frequency, a, b);
        const Complex minus = phase_integral(k - s->frequency, a, b);
        return s->amplitude * (plus - minus) / (2.0 * kI);
    }
    return sampled_integral(std::get<SampledForm>(form), k, a, b);
}

Complex lambda_phase_integral(const LambdaAffine& lambda, double k, double a, double b) {
    Complex total = lambda.offset * phase_integral(k, a, b);
    if (lambda.form != nullptr && lambda.scale != 0.0) {
        total += lambda.scale * weighted_phase_integral(*lambda.form, k, a, b);
    }
    return total;
}

} // namespace tbreak
