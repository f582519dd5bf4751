#include "tbreak/errors.hpp"
#include "tbreak/rates.hpp"
#include "tbreak/retro.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

using namespace tbreak;
using namespace tbreak::rates;

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

BandProblem reference_band(std::size_t count = 2001) {
    BandProblem p;
    p.initial_energy = 0.0;
    p.band.center_energy = 0.0;
    p.band.width = 2.0;
    p.band.count = count;
    p.band.couplings = {Complex{0.01, 0.0}};
    return p;
}

HarmonicBandProblem absorption_problem() {
    HarmonicBandProblem p;
    p.initial_energy = 0.0;
    p.drive_frequency = 5.0;
    p.band.center_energy = 5.0;
    p.band.width = 2.0;
    p.band.count = 2001;
    p.band.couplings = {Complex{0.01, 0.0}};
    return p;
}

} // namespace

TEST(GoldenRuleRate, Examples) {
    EXPECT_NEAR(golden_rule_rate(1e-4, 1000.0, 0.0), 0.6283185, 1e-7);
    EXPECT_NEAR(golden_rule_rate(1e-4, 1000.0, 0.5), 0.9424778, 1e-7);
    EXPECT_EQ(golden_rule_rate(1e-4, 1000.0, -1.0), 0.0);
    EXPECT_DOUBLE_EQ(golden_rule_rate(1e-4, 1000.0, 0.0, 2.0), 0.5 * golden_rule_rate(1e-4, 1000.0, 0.0));
}

TEST(BandSpec, LayoutAndDensity) {
    BandSpec b;
    b.center_energy = 1.0;
    b.width = 2.0;
    b.count = 5;
    b.couplings = {Complex{0.1, 0.0}};
    EXPECT_NO_THROW(b.validate());
    EXPECT_DOUBLE_EQ(b.density_of_states(), 2.5);
    EXPECT_DOUBLE_EQ(b.energy(2), 1.0);
    EXPECT_DOUBLE_EQ(b.energy(0), 1.0 - 0.8);
    EXPECT_DOUBLE_EQ(b.energy(4), 1.0 + 0.8);
    EXPECT_EQ(b.nearest_state(1.79), 4u);
    EXPECT_TRUE(b.contains(1.99));
    EXPECT_FALSE(b.contains(2.01));
    EXPECT_EQ(band_state_index(0), 1u);
}

TEST(BandSpec, RejectsInvalidBands) {
    BandSpec b;
    b.count = 4;
    EXPECT_THROW(b.validate(), InvalidBand);
    b.count = 1;
    EXPECT_THROW(b.validate(), InvalidBand);
    b.count = 5;
    b.width = 0.0;
    EXPECT_THROW(b.validate(), InvalidBand);
    b.width = 1.0;
    b.couplings = {Complex{0.1, 0.0}, Complex{0.1, 0.0}};
    EXPECT_THROW(b.validate(), InvalidBand);
    b.couplings = {Complex{std::nan(""), 0.0}};
    EXPECT_THROW(b.validate(), InvalidBand);
}

TEST(FiniteTimeBandRate, ConvergesToGoldenRule) {
    const BandProblem p = reference_band();
    const double reference = golden_rule_rate(1e-4, 1000.5, 0.0);
    const RateResult r = finite_time_band_rate(p, LambdaProfile(), 50.0);
    EXPECT_LT(std::abs(r.rate - reference) / reference, 0.02);
    EXPECT_EQ(r.regime, Regime::GoldenRuleValid);
    EXPECT_EQ(r.time_used, 50.0);
}

TEST(FiniteTimeBandRate, MatchesDirectSumOfOscillatoryProbabilities) {
    const BandProblem p = reference_band(101);
    const double t = 7.0;
    double sum = 0.0;
    for (std::size_t k = 0; k < p.band.count; ++k) {
        const double gap = p.band.energy(k) - p.initial_energy;
        // Independent evaluation of 4|c|^2 sin^2(gap t / 2) / gap^2.
        sum += gap == 0.0 ? 1e-4 * t * t : 4e-4 * std::pow(std::sin(gap * t / 2.0), 2) / (gap * gap);
    }
    EXPECT_NEAR(finite_time_band_rate(p, LambdaProfile(), t).rate, sum / t, 1e-14);
}

TEST(FiniteTimeBandRate, LambdaFactorIsExact) {
    const BandProblem p = reference_band();
    for (double t : {20.0, 50.0, 100.0}) {
        const double r0 = finite_time_band_rate(p, LambdaProfile(), t).rate;
        const double r5 = finite_time_band_rate(p, LambdaProfile::constant(0.5), t).rate;
        EXPECT_NEAR(r5 / r0, 1.5, 1.5e-10);
    }
}

TEST(FiniteTimeBandRate, PerStateLambdaDeselectsStates) {
    BandProblem p = reference_band(5);
    std::map<std::size_t, double> table;
    for (std::size_t k = 0; k < p.band.count; ++k) table[band_state_index(k)] = -1.0;
    EXPECT_EQ(finite_time_band_rate(p, LambdaProfile(0.0, table), 3.0).rate, 0.0);
}

TEST(FiniteTimeBandRate, RegimeFlags) {
    const BandProblem p = reference_band();
    EXPECT_EQ(finite_time_band_rate(p, LambdaProfile(), 0.01).regime, Regime::TooEarly);
    EXPECT_EQ(classify_regime(p, 50.0), Regime::GoldenRuleValid);
    BandProblem edge = reference_band();
    edge.initial_energy = 0.98;
    EXPECT_EQ(classify_regime(edge, 50.0), Regime::BandEdgeReached);
}

TEST(FiniteTimeBandRate, DoublingStatesDoublesRate) {
    const double r1 = finite_time_band_rate(reference_band(2001), LambdaProfile(), 50.0).rate;
    const double r2 = finite_time_band_rate(reference_band(4001), LambdaProfile(), 50.0).rate;
    EXPECT_LT(std::abs(r2 / r1 - 2.0) / 2.0, 0.005);
}

TEST(FiniteTimeBandRate, RejectsBadInputs) {
    const BandProblem p = reference_band();
    const LambdaProfile moving(0.0, {}, TimeProfile{SinusoidForm{0.1, 1.0}, Composition::Additive});
    EXPECT_THROW(finite_time_band_rate(p, moving, 10.0), ValidationError);
    EXPECT_THROW(finite_time_band_rate(p, LambdaProfile(), 0.0), ValidationError);
    EXPECT_THROW(finite_time_band_rate(reference_band(2000), LambdaProfile(), 10.0), InvalidBand);
}

TEST(HarmonicRate, AbsorptionExample) {
    const HarmonicRateResult r = harmonic_rate(absorption_problem(), 0.0, Branch::Absorption, 50.0);
    EXPECT_DOUBLE_EQ(r.resonant_energy, 5.0);
    EXPECT_DOUBLE_EQ(r.closed_form, kTwoPi * 1e-4 * 1000.5);
    EXPECT_NEAR(r.closed_form, 0.6283185, 1e-3);
    EXPECT_LT(std::abs(r.band_sum.rate - r.closed_form) / r.closed_form, 0.03);
    EXPECT_GT(r.full_band_sum, 0.0);
}

TEST(HarmonicRate, DeselectedBranchVanishes) {
    const HarmonicRateResult r = harmonic_rate(absorption_problem(), -1.0, Branch::Absorption, 50.0);
    EXPECT_EQ(r.closed_form, 0.0);
    EXPECT_EQ(r.band_sum.rate, 0.0);
}

TEST(HarmonicRate, ResonanceOutsideBand) {
    HarmonicBandProblem p = absorption_problem();
    EXPECT_THROW(harmonic_rate(p, 0.0, Branch::Emission, 50.0), ResonanceOutsideBand);
    p.band.center_energy = 20.0;
    EXPECT_THROW(harmonic_rate(p, 0.0, Branch::Absorption, 50.0), ResonanceOutsideBand);
}

TEST(HarmonicRate, EmissionAndAbsorptionSwapUnderAdjointAndMirror) {
    HarmonicBandProblem a = absorption_problem();
    a.band.count = 201;
    a.band.couplings.clear();
    a.reverse_couplings.clear();
    for (std::size_t k = 0; k < a.band.count; ++k) {
        const double x = static_cast<double>(k) / static_cast<double>(a.band.count);
        a.band.couplings.push_back(Complex{0.01 + 0.004 * x, -0.003 * x});
        a.reverse_couplings.push_back(Complex{0.008 - 0.002 * x, 0.005 * x * x});
    }
    // V -> V^dagger and E -> 2 E_i - E.
    HarmonicBandProblem b = a;
    b.band.center_energy = 2.0 * a.initial_energy - a.band.center_energy;
    const std::size_t n = a.band.count;
    for (std::size_t k = 0; k < n; ++k) {
        b.band.couplings[k] = std::conj(a.reverse_couplings[n - 1 - k]);
        b.reverse_couplings[k] = std::conj(a.band.couplings[n - 1 - k]);
    }
    const double t = 30.0;
    const auto abs_a = harmonic_rate(a, 0.2, Branch::Absorption, t);
    const auto emi_b = harmonic_rate(b, 0.2, Branch::Emission, t);
    EXPECT_DOUBLE_EQ(abs_a.closed_form, emi_b.closed_form);
    EXPECT_NEAR(abs_a.band_sum.rate, emi_b.band_sum.rate, 1e-13 * abs_a.band_sum.rate);
    // Absorption uses the reverse coupling, emission the forward one.
    const auto emi_a_mirror = harmonic_rate(b, 0.2, Branch::Emission, t);
    EXPECT_NEAR(emi_a_mirror.closed_form,
                1.2 * kTwoPi * std::norm(a.reverse_couplings[n / 2]) * a.band.density_of_states(), 1e-15);
}

TEST(HarmonicRate, ClosedFormUsesBandDensity) {
    HarmonicBandProblem p = absorption_problem();
    p.hbar = 2.0;
    p.drive_frequency = 2.5;
    const auto r = harmonic_rate(p, 0.5, Branch::Absorption, 50.0);
    EXPECT_DOUBLE_EQ(r.closed_form, 1.5 * kTwoPi / 2.0 * 1e-4 * 1000.5);
}
