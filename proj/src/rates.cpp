#include "tbreak/rates.hpp"

#include "tbreak/errors.hpp"
#include "tbreak/phase_integrals.hpp"
#include "tbreak/retro.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace tbreak::rates {

namespace {

constexpr Complex kI{0.0, 1.0};

void require_positive_time(double t) {
    if (!std::isfinite(t) || !(t > 0.0)) {
        throw ValidationError("rate evaluation needs a positive finite elapsed time");
    }
}

void require_hbar(double hbar) {
    if (!std::isfinite(hbar) || !(hbar > 0.0)) {
        throw ValidationError("hbar must be a positive finite number");
    }
}

Regime classify(double resonance, const BandSpec& band, double hbar, double t) {
    if (hbar / t > 0.1 * (0.5 * band.width)) {
        return Regime::TooEarly;
    }
    // Main lobe of the sinc^2 kernel, width 2 pi hbar / t around the resonance.
    const double half_lobe = std::numbers::pi * hbar / t;
    if (resonance - half_lobe < band.lower_edge() || resonance + half_lobe > band.upper_edge()) {
        return Regime::BandEdgeReached;
    }
    return Regime::GoldenRuleValid;
}

} // namespace

void BandSpec::validate() const {
    if (!std::isfinite(center_energy) || !std::isfinite(width) || !(width > 0.0)) {
        throw InvalidBand("band needs a finite centre and a positive finite width");
    }
    if (count < 3 || count % 2 == 0) {
        throw InvalidBand("band state count must be an odd integer >= 3 (got " + std::to_string(count) + ")");
    }
    if (couplings.size() != 1 && couplings.size() != count) {
        throw InvalidBand("band couplings must have 1 entry or one per state (got " +
                          std::to_string(couplings.size()) + ")");
    }
    for (const Complex& c : couplings) {
        if (!std::isfinite(c.real()) || !std::isfinite(c.imag())) {
            throw InvalidBand("band coupling is not finite");
        }
    }
}

double BandSpec::energy(std::size_t k) const noexcept {
    const double offset = static_cast<double>(k) - 0.5 * static_cast<double>(count - 1);
    return center_energy + offset * spacing();
}

Complex BandSpec::coupling(std::size_t k) const noexcept {
    return couplings.size() == 1 ? couplings.front() : couplings[k];
}

bool BandSpec::contains(double e) const noexcept {
    return e >= lower_edge() && e <= upper_edge();
}

std::size_t BandSpec::nearest_state(double e) const noexcept {
    const double pos = (e - center_energy) / spacing() + 0.5 * static_cast<double>(count - 1);
    const double clamped = std::clamp(std::round(pos), 0.0, static_cast<double>(count - 1));
    return static_cast<std::size_t>(clamped);
}

std::string to_string(Regime regime) {
    switch (regime) {
    case Regime::GoldenRuleValid: return "golden-rule-valid";
    case Regime::TooEarly: return "too-early";
    case Regime::BandEdgeReached: return "band-edge-reached";
    }
    return "unknown";
}

std::string to_string(Branch branch) {
    return branch == Branch::Emission ? "emission" : "absorption";
}

double golden_rule_rate(double coupling_sq, double rho, double lambda_f, double hbar) {
    return (1.0 + lambda_f) * (2.0 * std::numbers::pi / hbar) * coupling_sq * rho;
}

Regime classify_regime(const BandProblem& problem, double t) {
    require_positive_time(t);
    return classify(problem.initial_energy, problem.band, problem.hbar, t);
}

RateResult finite_time_band_rate(const BandProblem& problem, const LambdaProfile& lambda, double t) {
    problem.band.validate();
    require_hbar(problem.hbar);
    require_positive_time(t);
    if (lambda.is_time_dependent()) {
        throw ValidationError("band rates require a lambda profile that does not depend on time");
    }
    double total = 0.0;
    for (std::size_t k = 0; k < problem.band.count; ++k) {
        const double lam = lambda.resolve(band_state_index(k), 0.0);
        const double gap = problem.band.energy(k) - problem.initial_energy;
        total += (1.0 + lam) * retro::pr_qm_oscillatory(std::norm(problem.band.coupling(k)), gap, t, problem.hbar);
    }
    return {total / t, t, classify(problem.initial_energy, problem.band, problem.hbar, t)};
}

void HarmonicBandProblem::validate() const {
    band.validate();
    require_hbar(hbar);
    if (!std::isfinite(initial_energy) || !std::isfinite(drive_frequency)) {
        throw ValidationError("harmonic problem needs finite initial energy and drive frequency");
    }
    if (!reverse_couplings.empty() && reverse_couplings.size() != 1 && reverse_couplings.size() != band.count) {
        throw InvalidBand("reverse couplings must be empty, uniform, or one per band state");
    }
}

Complex HarmonicBandProblem::reverse_coupling(std::size_t k) const noexcept {
    if (reverse_couplings.empty()) return std::conj(band.coupling(k));
    return reverse_couplings.size() == 1 ? reverse_couplings.front() : reverse_couplings[k];
}

double resonant_energy(const HarmonicBandProblem& problem, Branch branch) noexcept {
    const double quantum = problem.hbar * problem.drive_frequency;
    return branch == Branch::Emission ? problem.initial_energy - quantum : problem.initial_energy + quantum;
}

HarmonicRateResult harmonic_rate(const HarmonicBandProblem& problem, double lambda_f, Branch branch, double t) {
    problem.validate();
    require_positive_time(t);
    if (!std::isfinite(lambda_f)) {
        throw NonFiniteEntry("lambda_f must be finite");
    }
    HarmonicRateResult out;
    out.resonant_energy = resonant_energy(problem, branch);
    if (!problem.band.contains(out.resonant_energy)) {
        throw ResonanceOutsideBand("resonant energy " + std::to_string(out.resonant_energy) + " for " +
                                   to_string(branch) + " lies outside the band [" +
                                   std::to_string(problem.band.lower_edge()) + ", " +
                                   std::to_string(problem.band.upper_edge()) + "]");
    }

    const double hbar = problem.hbar;
    const double w = problem.drive_frequency;
    const double weight = 1.0 + lambda_f;

    auto resonant_coefficient = [&](std::size_t k) {
        return branch == Branch::Emission ? problem.forward_coupling(k) : std::conj(problem.reverse_coupling(k));
    };

    const std::size_t at_resonance = problem.band.nearest_state(out.resonant_energy);
    out.closed_form = golden_rule_rate(std::norm(resonant_coefficient(at_resonance)),
                                       problem.band.density_of_states(), lambda_f, hbar);

    double rotating = 0.0;
    double full = 0.0;
    for (std::size_t k = 0; k < problem.band.count; ++k) {
        const double e_f = problem.band.energy(k);
        const double w_fi = (e_f - problem.initial_energy) / hbar;
        // Emission term rotates at w_fi + w, absorption term at w_fi - w.
        const double detuning = branch == Branch::Emission ? hbar * (w_fi + w) : hbar * (w_fi - w);
        rotating += weight * retro::pr_qm_oscillatory(std::norm(resonant_coefficient(k)), detuning, t, hbar);

        const Complex amp = (problem.forward_coupling(k) * phase_integral(w_fi + w, 0.0, t) +
                             std::conj(problem.reverse_coupling(k)) * phase_integral(w_fi - w, 0.0, t)) /
                            (kI * hbar);
        full += weight * std::norm(amp);
    }
    out.band_sum = {rotating / t, t, classify(out.resonant_energy, problem.band, hbar, t)};
    out.full_band_sum = full / t;
    out.counter_rotating_deviation =
        out.band_sum.rate != 0.0 ? std::abs(out.full_band_sum - out.band_sum.rate) / std::abs(out.band_sum.rate) : 0.0;
    return out;
}

} // namespace tbreak::rates
