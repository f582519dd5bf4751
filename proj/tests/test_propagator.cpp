#include "tbreak/errors.hpp"
#include "tbreak/numerics.hpp"
#include "tbreak/retro.hpp"

#include "oracles.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

using namespace tbreak;
using numerics::PropagatorMethod;
using numerics::PropagatorSettings;

namespace {

constexpr double kPi = std::numbers::pi;

ComplexVector ket(int n, int k) {
    ComplexVector v = ComplexVector::Zero(n);
    v(k) = 1.0;
    return v;
}

numerics::HamiltonianFn rabi(double g) {
    return [g](double) {
        ComplexMatrix h = ComplexMatrix::Zero(2, 2);
        h(0, 1) = g;
        h(1, 0) = g;
        return h;
    };
}

double rabi_error(double g, double t, const PropagatorSettings& s) {
    const ComplexVector psi = numerics::propagate_exact(rabi(g), ket(2, 0), TimeWindow(0.0, t), s);
    const auto [c0, c1] = oracle::rabi_amplitudes(g, t);
    return std::max(std::abs(psi(0) - c0), std::abs(psi(1) - c1));
}

} // namespace

TEST(PropagateExact, ZeroHamiltonianLeavesStateUnchanged) {
    std::mt19937_64 rng(3);
    const ComplexVector psi0 = oracle::random_state(rng, 4);
    auto zero = [](double) { return ComplexMatrix::Zero(4, 4).eval(); };
    for (auto method : {PropagatorMethod::RungeKutta4, PropagatorMethod::MidpointExponential}) {
        PropagatorSettings s;
        s.method = method;
        const ComplexVector out = numerics::propagate_exact(zero, psi0, TimeWindow(-1.0, 2.0), s);
        EXPECT_EQ((out - psi0).norm(), 0.0);
    }
}

TEST(PropagateExact, DiagonalPhaseEvolution) {
    // H = diag(0, 1), |1> over [0, pi] picks up e^{-i pi} = -1.
    auto h = [](double) {
        ComplexMatrix m = ComplexMatrix::Zero(2, 2);
        m(1, 1) = 1.0;
        return m;
    };
    for (auto method : {PropagatorMethod::RungeKutta4, PropagatorMethod::MidpointExponential}) {
        PropagatorSettings s;
        s.method = method;
        const ComplexVector out = numerics::propagate_exact(h, ket(2, 1), TimeWindow(0.0, kPi), s);
        EXPECT_LT(std::abs(out(1) - Complex(-1.0, 0.0)), 1e-10);
        EXPECT_EQ(out(0), Complex(0.0, 0.0));
    }
}

TEST(PropagateExact, DegenerateRabiSolution) {
    for (double t : {0.5, 2.0, 7.3}) {
        EXPECT_LT(rabi_error(0.3, t, {}), 1e-10) << "t = " << t;
    }
    PropagatorSettings s;
    s.method = PropagatorMethod::MidpointExponential;
    // Constant H: the exponential step is exact up to rounding.
    EXPECT_LT(rabi_error(0.3, 7.3, s), 1e-10);
}

TEST(PropagateExact, HbarRescalesTime) {
    const double hbar = 0.5;
    PropagatorSettings s;
    const ComplexVector psi = numerics::propagate_exact(rabi(0.3), ket(2, 0), TimeWindow(0.0, 2.0), s, hbar);
    const auto [c0, c1] = oracle::rabi_amplitudes(0.3, 2.0, hbar);
    EXPECT_LT(std::abs(psi(0) - c0), 1e-10);
    EXPECT_LT(std::abs(psi(1) - c1), 1e-10);
}

TEST(PropagateExact, UnitarityOnRandomTwoLevelSet) {
    std::mt19937_64 rng(21);
    for (int trial = 0; trial < 10; ++trial) {
        const ComplexMatrix a = oracle::random_hermitian(rng, 2, 1.0);
        const ComplexMatrix b = oracle::random_hermitian(rng, 2, 1.0);
        auto h = [&](double t) { return (a + std::cos(2.0 * t) * b).eval(); };
        const ComplexVector psi0 = oracle::random_state(rng, 2);
        const ComplexVector out = numerics::propagate_exact(h, psi0, TimeWindow(0.0, 5.0), {});
        EXPECT_LT(std::abs(out.norm() - 1.0), 1e-8);
    }
}

TEST(PropagateExact, StepHalvingGivesFourthOrderConvergence) {
    // Coarse steps keep the error well above rounding.
    const double g = 1.0;
    const double t = 4.0;
    PropagatorSettings coarse;
    coarse.steps_per_unit_time = 4;
    coarse.unitarity_check_tol = 1e-2;
    PropagatorSettings fine = coarse;
    fine.steps_per_unit_time = 8;
    PropagatorSettings finer = coarse;
    finer.steps_per_unit_time = 16;
    const double e1 = rabi_error(g, t, coarse);
    const double e2 = rabi_error(g, t, fine);
    const double e3 = rabi_error(g, t, finer);
    EXPECT_GT(e1 / e2, 16.0 / 2.0);
    EXPECT_LT(e1 / e2, 16.0 * 2.0);
    EXPECT_GT(e2 / e3, 16.0 / 2.0);
    EXPECT_LT(e2 / e3, 16.0 * 2.0);
}

TEST(PropagateExact, CoarseStepsLoseUnitarity) {
    PropagatorSettings s;
    s.steps_per_unit_time = 1;
    EXPECT_THROW(numerics::propagate_exact(rabi(3.0), ket(2, 0), TimeWindow(0.0, 10.0), s), UnitarityLost);
}

TEST(PropagateExact, RejectsBadInputs) {
    EXPECT_THROW(numerics::propagate_exact(rabi(0.3), 2.0 * ket(2, 0), TimeWindow(0.0, 1.0)), ValidationError);
    EXPECT_THROW(numerics::propagate_exact(rabi(0.3), ket(3, 0), TimeWindow(0.0, 1.0)), DimensionMismatch);
    PropagatorSettings s;
    s.steps_per_unit_time = 0;
    EXPECT_THROW(numerics::propagate_exact(rabi(0.3), ket(2, 0), TimeWindow(0.0, 1.0), s), ValidationError);
}

TEST(PropagateBackwardExact, ZeroHamiltonianLeavesStateUnchanged) {
    auto zero = [](double) { return ComplexMatrix::Zero(3, 3).eval(); };
    const ComplexVector out = numerics::propagate_backward_exact(zero, ket(3, 2), TimeWindow(0.0, 4.0));
    EXPECT_EQ((out - ket(3, 2)).norm(), 0.0);
}

TEST(PropagateBackwardExact, InvertsForwardEvolution) {
    std::mt19937_64 rng(8);
    const ComplexMatrix a = oracle::random_hermitian(rng, 3, 1.0);
    auto h = [&](double t) { return (a * (1.0 + 0.5 * std::sin(t))).eval(); };
    const ComplexVector psi0 = oracle::random_state(rng, 3);
    const TimeWindow w(0.5, 3.0);
    const ComplexVector fwd = numerics::propagate_exact(h, psi0, w);
    const ComplexVector back = numerics::propagate_backward_exact(h, fwd, w);
    EXPECT_LT((back - psi0).norm(), 1e-10);
}

namespace {

QuantumSystem small_coupling_system(double g) {
    ComplexMatrix m = ComplexMatrix::Zero(2, 2);
    m(0, 1) = g;
    m(1, 0) = g;
    return build_system({0.0, 1.0}, PerturbationSpec::constant(m));
}

} // namespace

TEST(PropagateBackwardExact, LambdaZeroGivesConjugateSymmetricAmplitudes) {
    const QuantumSystem s = small_coupling_system(0.05);
    const TransitionChannel c(s, 0, 1, TimeWindow(0.0, 2.5));
    const Complex forward = retro::exact_forward_amplitude(s, c);
    const Complex backward = retro::exact_backward_amplitude(s, LambdaProfile(), c);
    EXPECT_LT(std::abs(backward - std::conj(forward)), 1e-10);
    EXPECT_GT(std::abs(forward), 1e-2);
}

TEST(PropagateBackwardExact, ConstantLambdaScalesFirstOrderOverlap) {
    // The exact backward amplitude under H_B differs from (1 + lambda) conj(A_F) only at O(g^2).
    const LambdaProfile half = LambdaProfile::constant(0.5);
    double previous = 0.0;
    for (double g : {0.02, 0.01}) {
        const QuantumSystem s = small_coupling_system(g);
        const TransitionChannel c(s, 0, 1, TimeWindow(0.0, 2.0));
        const Complex b0 = retro::exact_backward_amplitude(s, LambdaProfile(), c);
        const Complex b5 = retro::exact_backward_amplitude(s, half, c);
        const Complex first_order = retro::backward_amplitude(s, half, c).value;
        const double dev = std::abs(b5 - 1.5 * b0);
        EXPECT_LT(dev, 10.0 * g * g);
        EXPECT_LT(std::abs(b5 - first_order), 10.0 * g * g);
        if (previous > 0.0) {
            EXPECT_GT(previous / dev, 2.0); // shrinks faster than linearly
        }
        previous = dev;
    }
}
