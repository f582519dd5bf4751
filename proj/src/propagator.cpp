#include "tbreak/numerics.hpp"

#include "tbreak/errors.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>

namespace tbreak::numerics {

namespace {

constexpr Complex kI{0.0, 1.0};

// d psi / dt = -i/hbar H(t) psi
ComplexVector rhs(const HamiltonianFn& hamiltonian, double t, const ComplexVector& psi, double hbar) {
    return (-kI / hbar) * (hamiltonian(t) * psi);
}

ComplexVector rk4_step(const HamiltonianFn& hamiltonian, double t, double dt, const ComplexVector& psi,
                       double hbar) {
    const ComplexVector k1 = rhs(hamiltonian, t, psi, hbar);
    const ComplexVector k2 = rhs(hamiltonian, t + 0.5 * dt, psi + (0.5 * dt) * k1, hbar);
    const ComplexVector k3 = rhs(hamiltonian, t + 0.5 * dt, psi + (0.5 * dt) * k2, hbar);
    const ComplexVector k4 = rhs(hamiltonian, t + dt, psi + dt * k3, hbar);
    return psi + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

ComplexVector exponential_step(const HamiltonianFn& hamiltonian, double t, double dt,
                               const ComplexVector& psi, double hbar) {
    const ComplexMatrix h = hamiltonian(t + 0.5 * dt);
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> solver(h);
    if (solver.info() != Eigen::Success) {
        throw NumericalError("midpoint-exponential step: eigendecomposition failed");
    }
    const Eigen::VectorXd& evals = solver.eigenvalues();
    ComplexVector phases(evals.size());
    for (Eigen::Index k = 0; k < evals.size(); ++k) {
        phases(k) = std::polar(1.0, -evals(k) * dt / hbar);
    }
    const ComplexMatrix& u = solver.eigenvectors();
    return u * phases.asDiagonal() * (u.adjoint() * psi);
}

ComplexVector integrate(const HamiltonianFn& hamiltonian, const ComplexVector& start, double from,
                        double to, const PropagatorSettings& settings, double hbar) {
    settings.validate();
    if (!std::isfinite(hbar) || !(hbar > 0.0)) {
        throw ValidationError("hbar must be a positive finite number");
    }
    const double norm0 = start.norm();
    if (std::abs(norm0 - 1.0) > settings.unitarity_check_tol) {
        throw ValidationError("propagator expects a normalized state (norm = " + std::to_string(norm0) + ")");
    }
    const ComplexMatrix h0 = hamiltonian(from);
    if (h0.rows() != start.size() || h0.cols() != start.size()) {
        throw DimensionMismatch("Hamiltonian dimension does not match the state vector");
    }

    const double span = std::abs(to - from);
    const auto steps = static_cast<long>(
        std::max(1.0, std::ceil(static_cast<double>(settings.steps_per_unit_time) * span - 1e-9)));
    const double dt = (to - from) / static_cast<double>(steps);

    ComplexVector psi = start;
    for (long n = 0; n < steps; ++n) {
        const double t = from + dt * static_cast<double>(n);
        psi = settings.method == PropagatorMethod::RungeKutta4 ? rk4_step(hamiltonian, t, dt, psi, hbar)
                                                               : exponential_step(hamiltonian, t, dt, psi, hbar);
    }

    const double drift = std::abs(psi.norm() - norm0);
    if (!(drift <= settings.unitarity_check_tol)) {
        throw UnitarityLost(drift, settings.unitarity_check_tol);
    }
    return psi;
}

} // namespace

void PropagatorSettings::validate() const {
    if (steps_per_unit_time < 1) {
        throw ValidationError("propagator steps_per_unit_time must be positive");
    }
    if (!(unitarity_check_tol > 0.0)) {
        throw ValidationError("propagator unitarity_check_tol must be positive");
    }
}

ComplexVector propagate_exact(const HamiltonianFn& hamiltonian, const ComplexVector& initial_state,
                              const TimeWindow& window, const PropagatorSettings& settings, double hbar) {
    return integrate(hamiltonian, initial_state, window.t_i(), window.t_f(), settings, hbar);
}

ComplexVector propagate_backward_exact(const HamiltonianFn& hamiltonian, const ComplexVector& final_state,
                                       const TimeWindow& window, const PropagatorSettings& settings,
                                       double hbar) {
    return integrate(hamiltonian, final_state, window.t_f(), window.t_i(), settings, hbar);
}

} // namespace tbreak::numerics
