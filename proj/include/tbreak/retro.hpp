#pragma once

#include "tbreak/model.hpp"
#include "tbreak/numerics.hpp"

#include <string>

namespace tbreak::retro {

// |Im(probability)| below this counts as real.
inline constexpr double kImaginaryTolerance = 1e-9;

// Below this value of |E_f - E_i| t / hbar the oscillatory formula switches to
// its resonant series.
inline constexpr double kResonantThreshold = 1e-4;

struct Amplitude {
    Complex value{0.0, 0.0};
    double error_estimate{0.0};
    bool converged{true};
};

struct AmplitudePair {
    Amplitude forward;  // Amp(i -> f)
    Amplitude backward; // Amp(f -> i)
};

// Composed probability Pr(i <-> f) = Amp(i -> f) * Amp(f -> i) and its split
// into the standard Born term and the lambda-dependent remainder. Flags are
// informational; values are never clamped.
struct TransitionResult {
    Complex probability{0.0, 0.0};
    double pr_qm{0.0};
    Complex pr_retro{0.0, 0.0};
    bool is_real{true};
    bool in_unit_interval{true};
    bool converged{true};
    std::string lambda_summary;
};

// First-order forward amplitude
//   (1 / i hbar) int_{t_start}^{t_f} e^{i w_fi t} H'_fi(t) dt
// evaluated by adaptive quadrature.
Amplitude forward_amplitude(const QuantumSystem& system, const TransitionChannel& channel,
                            const numerics::QuadratureSettings& settings = {});

// Backward amplitude: the complex conjugate of the forward integral with the
// interaction weighted by (1 + lambda_f(t)). Reduces to conj(forward) when
// lambda vanishes and to (1 + lambda) conj(forward) for constant lambda.
Amplitude backward_amplitude(const QuantumSystem& system, const LambdaProfile& lambda,
                             const TransitionChannel& channel,
                             const numerics::QuadratureSettings& settings = {});

AmplitudePair amplitude_pair(const QuantumSystem& system, const LambdaProfile& lambda,
                             const TransitionChannel& channel,
                             const numerics::QuadratureSettings& settings = {});

TransitionResult transition_probability(const QuantumSystem& system, const LambdaProfile& lambda,
                                        const TransitionChannel& channel,
                                        const numerics::QuadratureSettings& settings = {});

// Closed forms; constant perturbation kind only.
Complex forward_amplitude_closed_form(const QuantumSystem& system, const TransitionChannel& channel);

// 4 |H'_fi|^2 / (E_f - E_i)^2 sin^2((E_f - E_i) t / 2 hbar), t measured from switch-on.
double pr_qm_oscillatory(const QuantumSystem& system, const TransitionChannel& channel);

// Same formula on raw inputs; shared with the band sums in the rates module.
double pr_qm_oscillatory(double coupling_sq, double energy_gap, double elapsed, double hbar);

// A_F * conj[(1 / i hbar) int e^{i w_fi t} lambda_f(t) H'_fi dt] with both
// factors in closed form (constant, sinusoidal or tabulated lambda).
Complex pr_retro_constant_perturbation(const QuantumSystem& system, const LambdaProfile& lambda,
                                       const TransitionChannel& channel);

// --- exact propagator oracle ---------------------------------------------------

// H_F(t) = H0 + H'(t)
numerics::HamiltonianFn forward_hamiltonian(const QuantumSystem& system);

// H_B(t) = H0 + (1 + lambda_f(t)) H'(t) for the channel's final state f.
numerics::HamiltonianFn backward_hamiltonian(const QuantumSystem& system, const LambdaProfile& lambda,
                                             std::size_t f);

// Interaction-picture <f| U_F(t_f, t_i) |i>, all orders.
Complex exact_forward_amplitude(const QuantumSystem& system, const TransitionChannel& channel,
                                const numerics::PropagatorSettings& settings = {});

// conj of the interaction-picture <f| U_B(t_f, t_i) |i>, obtained by propagating
// |f> backward from t_f under H_B and overlapping with |i>.
Complex exact_backward_amplitude(const QuantumSystem& system, const LambdaProfile& lambda,
                                 const TransitionChannel& channel,
                                 const numerics::PropagatorSettings& settings = {});

struct FirstOrderCheck {
    Complex exact{0.0, 0.0};
    Complex first_order{0.0, 0.0};
    double residual{0.0};
};

FirstOrderCheck first_order_residual(const QuantumSystem& system, const TransitionChannel& channel,
                                     const numerics::QuadratureSettings& quadrature = {},
                                     const numerics::PropagatorSettings& propagator = {});

} // namespace tbreak::retro
