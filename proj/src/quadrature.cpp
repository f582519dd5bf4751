#include "tbreak/numerics.hpp"

#include "tbreak/errors.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <tuple>
#include <vector>

namespace tbreak::numerics {

namespace {

// Kronrod abscissae on [0, 1]; odd indices are the embedded Gauss points.
constexpr std::array<double, 8> kXgk = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000,
};

constexpr std::array<double, 8> kWgk = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714,
};

constexpr std::array<double, 4> kWg = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327,
};

struct Panel {
    double a;
    double b;
    Complex value;
    double error;
};

struct WorseFirst {
    bool operator()(const Panel& lhs, const Panel& rhs) const noexcept {
        if (lhs.error != rhs.error) return lhs.error < rhs.error;
        return lhs.a > rhs.a;
    }
};

Complex checked(const ComplexIntegrand& f, double t) {
    const Complex v = f(t);
    if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) {
        throw NonFiniteIntegrand("integrand is not finite at t = " + std::to_string(t));
    }
    return v;
}

Panel gauss_kronrod(const ComplexIntegrand& f, double a, double b) {
    const double center = 0.5 * (a + b);
    const double half = 0.5 * (b - a);

    const Complex fc = checked(f, center);
    Complex kronrod = fc * kWgk[7];
    Complex gauss = fc * kWg[3];
    for (std::size_t j = 0; j < 7; ++j) {
        const double dx = half * kXgk[j];
        const Complex sum = checked(f, center - dx) + checked(f, center + dx);
        kronrod += sum * kWgk[j];
        if (j % 2 == 1) {
            gauss += sum * kWg[j / 2];
        }
    }
    kronrod *= half;
    gauss *= half;
    return {a, b, kronrod, std::abs(kronrod - gauss)};
}

} // namespace

void QuadratureSettings::validate() const {
    if (!(abs_tol > 0.0) || !(rel_tol > 0.0)) {
        throw ValidationError("quadrature tolerances must be positive");
    }
    if (max_subdivisions < 1) {
        throw ValidationError("quadrature max_subdivisions must be >= 1");
    }
    if (min_panels_per_period < 1) {
        throw ValidationError("quadrature min_panels_per_period must be >= 1");
    }
}

QuadratureResult integrate_complex(const ComplexIntegrand& integrand, double a, double b,
                                   const QuadratureSettings& settings, double frequency_hint) {
    settings.validate();
    if (!std::isfinite(a) || !std::isfinite(b)) {
        throw NonFiniteEntry("integration bounds must be finite");
    }
    if (a == b) {
        return {};
    }
    if (b < a) {
        QuadratureResult r = integrate_complex(integrand, b, a, settings, frequency_hint);
        r.value = -r.value;
        return r;
    }

    const double periods = std::abs(frequency_hint) * (b - a) / (2.0 * std::numbers::pi);
    const double wanted = std::ceil(periods * settings.min_panels_per_period);
    const auto initial = static_cast<std::size_t>(
        std::clamp(wanted, 1.0, static_cast<double>(settings.max_subdivisions)));

    std::vector<Panel> storage;
    storage.reserve(initial);
    const double h = (b - a) / static_cast<double>(initial);
    for (std::size_t k = 0; k < initial; ++k) {
        const double lo = a + h * static_cast<double>(k);
        const double hi = (k + 1 == initial) ? b : a + h * static_cast<double>(k + 1);
        storage.push_back(gauss_kronrod(integrand, lo, hi));
    }
    std::vector<Panel> heap = std::move(storage);
    std::make_heap(heap.begin(), heap.end(), WorseFirst{});

    // Running sums drift under repeated add/subtract; they are refreshed from
    // the panel list before convergence is accepted.
    auto exact_totals = [&heap]() {
        Complex value{0.0, 0.0};
        double error = 0.0;
        for (const Panel& p : heap) {
            value += p.value;
            error += p.error;
        }
        return std::pair{value, error};
    };
    auto target = [&settings](Complex v) { return std::max(settings.abs_tol, settings.rel_tol * std::abs(v)); };

    auto [value, error] = exact_totals();
    std::size_t next_refresh = 0;
    while (true) {
        if (error <= target(value) && heap.size() >= next_refresh) {
            std::tie(value, error) = exact_totals();
            if (error <= target(value)) {
                break;
            }
            next_refresh = heap.size() + heap.size() / 8 + 1;
        }
        if (heap.size() >= settings.max_subdivisions) {
            break;
        }
        const Panel worst = heap.front();
        const double mid = 0.5 * (worst.a + worst.b);
        if (!(mid > worst.a && mid < worst.b)) {
            break;
        }
        std::pop_heap(heap.begin(), heap.end(), WorseFirst{});
        heap.pop_back();
        const Panel left = gauss_kronrod(integrand, worst.a, mid);
        const Panel right = gauss_kronrod(integrand, mid, worst.b);
        value += left.value + right.value - worst.value;
        error += left.error + right.error - worst.error;
        heap.push_back(left);
        std::push_heap(heap.begin(), heap.end(), WorseFirst{});
        heap.push_back(right);
        std::push_heap(heap.begin(), heap.end(), WorseFirst{});
    }

    const auto [v, e] = exact_totals();
    const bool ok = e <= target(v);
    return {v, e, ok, heap.size()};
}

QuadratureResult integrate_complex(const ComplexIntegrand& integrand, const TimeWindow& window,
                                   const QuadratureSettings& settings, double frequency_hint) {
    return integrate_complex(integrand, window.t_i(), window.t_f(), settings, frequency_hint);
}

} // namespace tbreak::numerics
