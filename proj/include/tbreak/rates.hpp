#pragma once

#include "tbreak/model.hpp"

#include <cstddef>
#include <string>
#include <vector>

namespace tbreak::rates {

// Quasi-continuum of `count` equally spaced final states centred on
// center_energy. State k sits at center + (k - (count-1)/2) * width / count,
// so the density of states is count / width.
struct BandSpec {
    double center_energy{0.0};
    double width{1.0};
    std::size_t count{3};
    // One entry (uniform coupling) or one per band state.
    std::vector<Complex> couplings{Complex{0.0, 0.0}};

    void validate() const;
    double density_of_states() const noexcept { return static_cast<double>(count) / width; }
    double spacing() const noexcept { return width / static_cast<double>(count); }
    double energy(std::size_t k) const noexcept;
    Complex coupling(std::size_t k) const noexcept;
    double lower_edge() const noexcept { return center_energy - 0.5 * width; }
    double upper_edge() const noexcept { return center_energy + 0.5 * width; }
    bool contains(double energy) const noexcept;
    std::size_t nearest_state(double energy) const noexcept;
};

// Initial level |i> coupled to a band. Band state k is final-state index k + 1
// when resolving per-state lambda values.
struct BandProblem {
    double initial_energy{0.0};
    BandSpec band;
    double hbar{1.0};
};

inline constexpr std::size_t band_state_index(std::size_t k) noexcept { return k + 1; }

enum class Regime { GoldenRuleValid, TooEarly, BandEdgeReached };

std::string to_string(Regime regime);

struct RateResult {
    double rate{0.0};
    double time_used{0.0};
    Regime regime{Regime::GoldenRuleValid};
};

// (1 + lambda_f) (2 pi / hbar) |H'_fi|^2 rho
double golden_rule_rate(double coupling_sq, double rho, double lambda_f, double hbar = 1.0);

Regime classify_regime(const BandProblem& problem, double t);

// Sum over band states of (1 + lambda_f) times the oscillatory first-order
// probability at elapsed time t, divided by t. Summation runs in ascending
// state index. The lambda profile must not depend on time.
RateResult finite_time_band_rate(const BandProblem& problem, const LambdaProfile& lambda, double t);

enum class Branch { Emission, Absorption };

std::string to_string(Branch branch);

// Harmonic drive H'(t) = V e^{i w t} + V^dagger e^{-i w t} from |i> into a band.
// band.couplings holds V_fi = <f|V|i>; reverse_couplings holds V_if = <i|V|f>
// (empty means V is Hermitian on this block, V_if = conj(V_fi)).
//
// The e^{i w t} term is resonant for emission (E_f = E_i - hbar w) with
// coefficient V_fi; the e^{-i w t} term for absorption (E_f = E_i + hbar w)
// with coefficient (V^dagger)_fi = conj(V_if).
struct HarmonicBandProblem {
    double initial_energy{0.0};
    double drive_frequency{0.0};
    BandSpec band;
    std::vector<Complex> reverse_couplings;
    double hbar{1.0};

    void validate() const;
    Complex forward_coupling(std::size_t k) const noexcept { return band.coupling(k); }
    Complex reverse_coupling(std::size_t k) const noexcept;
};

double resonant_energy(const HarmonicBandProblem& problem, Branch branch) noexcept;

struct HarmonicRateResult {
    double resonant_energy{0.0};
    // Delta function realized as the band density of states at resonance.
    double closed_form{0.0};
    // Finite-time sum keeping only the resonant rotating term.
    RateResult band_sum;
    // Same sum with both terms of H'(t); diagnostic only.
    double full_band_sum{0.0};
    double counter_rotating_deviation{0.0};
};

HarmonicRateResult harmonic_rate(const HarmonicBandProblem& problem, double lambda_f, Branch branch, double t);

} // namespace tbreak::rates
