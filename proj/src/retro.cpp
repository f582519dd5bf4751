#include "tbreak/retro.hpp"

#include "tbreak/errors.hpp"
#include "tbreak/phase_integrals.hpp"

#include <cmath>

namespace tbreak::retro {

namespace {

constexpr Complex kI{0.0, 1.0};

double frequency_hint(const QuantumSystem& system, const TransitionChannel& channel) {
    double hint = std::abs(channel.omega_fi());
    if (system.perturbation().kind() == PerturbationKind::Harmonic) {
        hint += std::abs(system.perturbation().drive_frequency());
    }
    return hint;
}

double lambda_frequency(const LambdaProfile& lambda) {
    if (!lambda.time_profile()) return 0.0;
    if (const auto* s = std::get_if<SinusoidForm>(&lambda.time_profile()->form)) {
        return std::abs(s->frequency);
    }
    return 0.0;
}

void require_constant(const QuantumSystem& system, const char* what) {
    if (system.perturbation().kind() != PerturbationKind::Constant) {
        throw WrongPerturbationKind(std::string(what) + " requires a constant perturbation (got " +
                                    to_string(system.perturbation().kind()) + ")");
    }
}

// Integrates (1 / i hbar) e^{i w t} weight(t) H'_fi(t) over the active part of the window.
template <typename Weight>
Amplitude first_order_integral(const QuantumSystem& system, const TransitionChannel& channel,
                               const numerics::QuadratureSettings& settings, double hint, Weight weight) {
    const double start = system.perturbation().effective_start(channel.window());
    const double stop = channel.window().t_f();
    if (!(stop > start)) {
        return {};
    }
    const double w = channel.omega_fi();
    const std::size_t f = channel.f();
    const std::size_t i = channel.i();
    const PerturbationSpec& h = system.perturbation();
    auto integrand = [&](double t) -> Complex {
        return weight(t) * std::polar(1.0, w * t) * h.element(f, i, t);
    };
    const numerics::QuadratureResult q = numerics::integrate_complex(integrand, start, stop, settings, hint);
    const double hbar = system.hbar();
    return {q.value / (kI * hbar), q.error_estimate / hbar, q.converged};
}

ComplexMatrix diagonal_energies(const QuantumSystem& system) {
    const auto n = static_cast<Eigen::Index>(system.dimension());
    ComplexMatrix h0 = ComplexMatrix::Zero(n, n);
    for (Eigen::Index k = 0; k < n; ++k) {
        h0(k, k) = system.energies()[static_cast<std::size_t>(k)];
    }
    return h0;
}

ComplexVector basis_state(std::size_t dim, std::size_t n) {
    ComplexVector v = ComplexVector::Zero(static_cast<Eigen::Index>(dim));
    v(static_cast<Eigen::Index>(n)) = 1.0;
    return v;
}

// Phase relating Schroedinger-picture <f|U|i> to the interaction picture.
Complex interaction_phase(const QuantumSystem& system, const TransitionChannel& channel) {
    const double phase = (system.energy(channel.f()) * channel.window().t_f() -
                          system.energy(channel.i()) * channel.window().t_i()) /
                         system.hbar();
    return std::polar(1.0, phase);
}

} // namespace

Amplitude forward_amplitude(const QuantumSystem& system, const TransitionChannel& channel,
                            const numerics::QuadratureSettings& settings) {
    return first_order_integral(system, channel, settings, frequency_hint(system, channel),
                                [](double) { return 1.0; });
}

Amplitude backward_amplitude(const QuantumSystem& system, const LambdaProfile& lambda,
                             const TransitionChannel& channel, const numerics::QuadratureSettings& settings) {
    const std::size_t f = channel.f();
    const double hint = frequency_hint(system, channel) + lambda_frequency(lambda);
    Amplitude a = first_order_integral(system, channel, settings, hint,
                                       [&lambda, f](double t) { return 1.0 + lambda.resolve(f, t); });
    a.value = std::conj(a.value);
    return a;
}

AmplitudePair amplitude_pair(const QuantumSystem& system, const LambdaProfile& lambda,
                             const TransitionChannel& channel, const numerics::QuadratureSettings& settings) {
    return {forward_amplitude(system, channel, settings), backward_amplitude(system, lambda, channel, settings)};
}

TransitionResult transition_probability(const QuantumSystem& system, const LambdaProfile& lambda,
                                        const TransitionChannel& channel,
                                        const numerics::QuadratureSettings& settings) {
    const AmplitudePair amps = amplitude_pair(system, lambda, channel, settings);
    TransitionResult r;
    r.probability = amps.forward.value * amps.backward.value;
    r.pr_qm = std::norm(amps.forward.value);
    r.pr_retro = r.probability - r.pr_qm;
    r.is_real = std::abs(r.probability.imag()) < kImaginaryTolerance;
    r.in_unit_interval = r.is_real && r.probability.real() >= 0.0 && r.probability.real() <= 1.0;
    r.converged = amps.forward.converged && amps.backward.converged;
    r.lambda_summary = lambda.summary(channel.f());
    return r;
}

Complex forward_amplitude_closed_form(const QuantumSystem& system, const TransitionChannel& channel) {
    require_constant(system, "closed-form forward amplitude");
    const double start = system.perturbation().effective_start(channel.window());
    const double stop = channel.window().t_f();
    if (!(stop > start)) {
        return {0.0, 0.0};
    }
    const Complex h_fi = system.perturbation().matrix()(static_cast<Eigen::Index>(channel.f()),
                                                        static_cast<Eigen::Index>(channel.i()));
    return h_fi * phase_integral(channel.omega_fi(), start, stop) / (kI * system.hbar());
}

double pr_qm_oscillatory(double coupling_sq, double energy_gap, double elapsed, double hbar) {
    if (!(elapsed > 0.0)) {
        return 0.0;
    }
    const double x = energy_gap * elapsed / hbar;
    if (std::abs(x) < kResonantThreshold) {
        // sin^2(x/2) / (x/2)^2 = 1 - x^2/12 + O(x^4)
        const double base = coupling_sq * elapsed * elapsed / (hbar * hbar);
        return base * (1.0 - x * x / 12.0);
    }
    const double s = std::sin(0.5 * x);
    return 4.0 * coupling_sq / (energy_gap * energy_gap) * s * s;
}

double pr_qm_oscillatory(const QuantumSystem& system, const TransitionChannel& channel) {
    require_constant(system, "oscillatory formula");
    const double start = system.perturbation().effective_start(channel.window());
    const Complex h_fi = system.perturbation().matrix()(static_cast<Eigen::Index>(channel.f()),
                                                        static_cast<Eigen::Index>(channel.i()));
    const double gap = system.energy(channel.f()) - system.energy(channel.i());
    return pr_qm_oscillatory(std::norm(h_fi), gap, channel.window().t_f() - start, system.hbar());
}

Complex pr_retro_constant_perturbation(const QuantumSystem& system, const LambdaProfile& lambda,
                                       const TransitionChannel& channel) {
    require_constant(system, "closed-form retro term");
    const double start = system.perturbation().effective_start(channel.window());
    const double stop = channel.window().t_f();
    if (!(stop > start)) {
        return {0.0, 0.0};
    }
    const Complex h_fi = system.perturbation().matrix()(static_cast<Eigen::Index>(channel.f()),
                                                        static_cast<Eigen::Index>(channel.i()));
    const Complex forward = forward_amplitude_closed_form(system, channel);
    const Complex retro_integral =
        h_fi * lambda_phase_integral(lambda.affine(channel.f()), channel.omega_fi(), start, stop) /
        (kI * system.hbar());
    return forward * std::conj(retro_integral);
}

numerics::HamiltonianFn forward_hamiltonian(const QuantumSystem& system) {
    ComplexMatrix h0 = diagonal_energies(system);
    return [h0 = std::move(h0), &system](double t) -> ComplexMatrix { return h0 + system.perturbation().at(t); };
}

numerics::HamiltonianFn backward_hamiltonian(const QuantumSystem& system, const LambdaProfile& lambda,
                                             std::size_t f) {
    ComplexMatrix h0 = diagonal_energies(system);
    return [h0 = std::move(h0), &system, &lambda, f](double t) -> ComplexMatrix {
        return h0 + (1.0 + lambda.resolve(f, t)) * system.perturbation().at(t);
    };
}

Complex exact_forward_amplitude(const QuantumSystem& system, const TransitionChannel& channel,
                                const numerics::PropagatorSettings& settings) {
    const ComplexVector psi = numerics::propagate_exact(
        forward_hamiltonian(system), basis_state(system.dimension(), channel.i()), channel.window(), settings,
        system.hbar());
    return interaction_phase(system, channel) * psi(static_cast<Eigen::Index>(channel.f()));
}

Complex exact_backward_amplitude(const QuantumSystem& system, const LambdaProfile& lambda,
                                 const TransitionChannel& channel, const numerics::PropagatorSettings& settings) {
    const ComplexVector chi = numerics::propagate_backward_exact(
        backward_hamiltonian(system, lambda, channel.f()), basis_state(system.dimension(), channel.f()),
        channel.window(), settings, system.hbar());
    // <chi|i> = <f|U_B|i>; the backward amplitude is its interaction-picture conjugate.
    return std::conj(interaction_phase(system, channel)) * chi(static_cast<Eigen::Index>(channel.i()));
}

FirstOrderCheck first_order_residual(const QuantumSystem& system, const TransitionChannel& channel,
                                     const numerics::QuadratureSettings& quadrature,
                                     const numerics::PropagatorSettings& propagator) {
    FirstOrderCheck out;
    out.exact = exact_forward_amplitude(system, channel, propagator);
    out.first_order = forward_amplitude(system, channel, quadrature).value;
    out.residual = std::abs(out.exact - out.first_order);
    return out;
}

} // namespace tbreak::retro
