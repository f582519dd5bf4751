#pragma once

#include "tbreak/model.hpp"

#include <string>
#include <vector>

namespace tbreak::tsvf {

inline constexpr double kProjectorTolerance = 1e-12;

// Pre-selected |phi> and post-selected <psi|; post is stored as a ket and
// conjugated where it is used.
class TwoStateVector {
public:
    TwoStateVector(ComplexVector pre, ComplexVector post);

    const ComplexVector& pre() const noexcept { return pre_; }
    const ComplexVector& post() const noexcept { return post_; }

private:
    ComplexVector pre_;
    ComplexVector post_;
};

struct Outcome {
    std::string label;
    ComplexMatrix projector;
};

// Complete set of mutually orthogonal Hermitian projectors.
class ProjectiveMeasurement {
public:
    explicit ProjectiveMeasurement(std::vector<Outcome> outcomes);

    // One rank-1 projector |n><n| per basis state, labelled q0, q1, ...
    static ProjectiveMeasurement computational_basis(std::size_t dimension);

    std::size_t dimension() const noexcept;
    std::size_t size() const noexcept { return outcomes_.size(); }
    const std::vector<Outcome>& outcomes() const noexcept { return outcomes_; }

private:
    std::vector<Outcome> outcomes_;
};

// Pr(q_n) = |<psi|P_n|phi>|^2 / sum_j |<psi|P_j|phi>|^2
std::vector<double> abl_probability(const TwoStateVector& tsv, const ProjectiveMeasurement& meas);

// Pr(q_n) = <phi|P_n|phi>
std::vector<double> born_probability(const ComplexVector& state, const ProjectiveMeasurement& meas);

struct BornReduction {
    bool agrees{false};
    double max_deviation{0.0};
};

// Averages the ABL distribution over post-selections drawn from an orthonormal
// basis adapted to the measurement, each weighted by its probability
// sum_n |<b|P_n|phi>|^2, and compares with the Born distribution.
BornReduction abl_reduces_to_born_check(const ComplexVector& state, const ProjectiveMeasurement& meas,
                                        double tolerance = 1e-10);

} // namespace tbreak::tsvf
