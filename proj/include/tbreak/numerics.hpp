#pragma once

#include "tbreak/model.hpp"

#include <cstddef>
#include <functional>

namespace tbreak::numerics {

struct QuadratureSettings {
    double abs_tol{1e-10};
    double rel_tol{1e-10};
    std::size_t max_subdivisions{1'000'000};
    int min_panels_per_period{8};

    void validate() const;
};

struct QuadratureResult {
    Complex value{0.0, 0.0};
    double error_estimate{0.0};
    // False when max_subdivisions was exhausted first; value is then the best estimate.
    bool converged{true};
    std::size_t panels{0};
};

using ComplexIntegrand = std::function<Complex(double)>;

// Globally adaptive 7/15-point Gauss-Kronrod on the real and imaginary parts
// jointly. The panel whose |K15 - G7| is largest is bisected until the summed
// estimate drops below max(abs_tol, rel_tol * |result|).
//
// frequency_hint (rad per unit time) seeds the initial partition with at least
// min_panels_per_period panels per oscillation period.
QuadratureResult integrate_complex(const ComplexIntegrand& integrand, double a, double b,
                                   const QuadratureSettings& settings = {},
                                   double frequency_hint = 0.0);

QuadratureResult integrate_complex(const ComplexIntegrand& integrand, const TimeWindow& window,
                                   const QuadratureSettings& settings = {},
                                   double frequency_hint = 0.0);

enum class PropagatorMethod {
    RungeKutta4,        // classical fixed-step RK4
    MidpointExponential // exp(-i H(t + dt/2) dt / hbar) per step
};

struct PropagatorSettings {
    int steps_per_unit_time{1000};
    PropagatorMethod method{PropagatorMethod::RungeKutta4};
    double unitarity_check_tol{1e-8};

    void validate() const;
};

using HamiltonianFn = std::function<ComplexMatrix(double)>;

// Solves i hbar dpsi/dt = H(t) psi from window.t_i to window.t_f.
// Throws UnitarityLost when | |psi(t_f)| - 1 | exceeds the settings tolerance.
ComplexVector propagate_exact(const HamiltonianFn& hamiltonian, const ComplexVector& initial_state,
                              const TimeWindow& window, const PropagatorSettings& settings = {},
                              double hbar = 1.0);

// Same equation, integrated from window.t_f down to window.t_i starting at
// final_state. Returns U(t_f, t_i)^dagger |final_state>.
ComplexVector propagate_backward_exact(const HamiltonianFn& hamiltonian, const ComplexVector& final_state,
                                       const TimeWindow& window, const PropagatorSettings& settings = {},
                                       double hbar = 1.0);

} // namespace tbreak::numerics
