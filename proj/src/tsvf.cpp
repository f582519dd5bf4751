#include "tbreak/tsvf.hpp"

#include "tbreak/errors.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>

namespace tbreak::tsvf {

namespace {

void require_unit(const ComplexVector& v, const char* what) {
    if (v.size() == 0) {
        throw DimensionMismatch(std::string(what) + " is empty");
    }
    if (!v.allFinite()) {
        throw NonFiniteEntry(std::string(what) + " has non-finite entries");
    }
    const double n = v.norm();
    if (std::abs(n - 1.0) > kProjectorTolerance) {
        throw ValidationError(std::string(what) + " must be normalized (norm = " + std::to_string(n) + ")");
    }
}

void require_dimension(const ComplexVector& v, const ProjectiveMeasurement& meas) {
    if (static_cast<std::size_t>(v.size()) != meas.dimension()) {
        throw DimensionMismatch("state has dimension " + std::to_string(v.size()) + ", measurement acts on " +
                                std::to_string(meas.dimension()));
    }
}

double max_abs(const ComplexMatrix& m) {
    return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff();
}

} // namespace

TwoStateVector::TwoStateVector(ComplexVector pre, ComplexVector post) : pre_(std::move(pre)), post_(std::move(post)) {
    require_unit(pre_, "pre-selected state");
    require_unit(post_, "post-selected state");
    if (pre_.size() != post_.size()) {
        throw DimensionMismatch("pre- and post-selected states differ in dimension");
    }
}

ProjectiveMeasurement::ProjectiveMeasurement(std::vector<Outcome> outcomes) : outcomes_(std::move(outcomes)) {
    if (outcomes_.empty()) {
        throw ValidationError("measurement needs at least one outcome");
    }
    const Eigen::Index n = outcomes_.front().projector.rows();
    if (n == 0) {
        throw DimensionMismatch("projectors must be non-empty");
    }
    ComplexMatrix sum = ComplexMatrix::Zero(n, n);
    for (std::size_t a = 0; a < outcomes_.size(); ++a) {
        const ComplexMatrix& p = outcomes_[a].projector;
        const std::string& label = outcomes_[a].label;
        if (p.rows() != n || p.cols() != n) {
            throw DimensionMismatch("projector '" + label + "' has the wrong shape");
        }
        if (!p.allFinite()) {
            throw NonFiniteEntry("projector '" + label + "' has non-finite entries");
        }
        if (max_abs(p - p.adjoint()) > kProjectorTolerance) {
            throw ValidationError("projector '" + label + "' is not Hermitian");
        }
        if (max_abs(p * p - p) > kProjectorTolerance) {
            throw ValidationError("projector '" + label + "' is not idempotent");
        }
        for (std::size_t b = 0; b < a; ++b) {
            if (max_abs(outcomes_[b].projector * p) > kProjectorTolerance) {
                throw ValidationError("projectors '" + outcomes_[b].label + "' and '" + label +
                                      "' are not orthogonal");
            }
        }
        sum += p;
    }
    if (max_abs(sum - ComplexMatrix::Identity(n, n)) > kProjectorTolerance) {
        throw ValidationError("projectors do not sum to the identity");
    }
}

ProjectiveMeasurement ProjectiveMeasurement::computational_basis(std::size_t dimension) {
    std::vector<Outcome> outcomes;
    const auto n = static_cast<Eigen::Index>(dimension);
    for (Eigen::Index k = 0; k < n; ++k) {
        ComplexMatrix p = ComplexMatrix::Zero(n, n);
        p(k, k) = 1.0;
        outcomes.push_back({"q" + std::to_string(k), std::move(p)});
    }
    return ProjectiveMeasurement(std::move(outcomes));
}

std::size_t ProjectiveMeasurement::dimension() const noexcept {
    return static_cast<std::size_t>(outcomes_.front().projector.rows());
}

std::vector<double> abl_probability(const TwoStateVector& tsv, const ProjectiveMeasurement& meas) {
    require_dimension(tsv.pre(), meas);
    std::vector<double> weights;
    weights.reserve(meas.size());
    double total = 0.0;
    for (const Outcome& o : meas.outcomes()) {
        const Complex amp = tsv.post().dot(o.projector * tsv.pre()); // dot conjugates its left operand
        weights.push_back(std::norm(amp));
        total += weights.back();
    }
    if (!(total > 0.0)) {
        throw OrthogonalSelection("post-selected state is unreachable from the pre-selected state through every "
                                  "measurement outcome");
    }
    for (double& w : weights) {
        w /= total;
    }
    return weights;
}

std::vector<double> born_probability(const ComplexVector& state, const ProjectiveMeasurement& meas) {
    require_unit(state, "state");
    require_dimension(state, meas);
    std::vector<double> probs;
    probs.reserve(meas.size());
    for (const Outcome& o : meas.outcomes()) {
        probs.push_back(state.dot(o.projector * state).real());
    }
    return probs;
}

BornReduction abl_reduces_to_born_check(const ComplexVector& state, const ProjectiveMeasurement& meas,
                                        double tolerance) {
    const std::vector<double> born = born_probability(state, meas);
    std::vector<double> averaged(meas.size(), 0.0);

    for (const Outcome& o : meas.outcomes()) {
        // Orthonormal basis of the projector's range.
        Eigen::SelfAdjointEigenSolver<ComplexMatrix> solver(o.projector);
        for (Eigen::Index k = 0; k < solver.eigenvalues().size(); ++k) {
            if (solver.eigenvalues()(k) < 0.5) continue;
            const ComplexVector post = solver.eigenvectors().col(k);
            double weight = 0.0;
            for (const Outcome& q : meas.outcomes()) {
                weight += std::norm(post.dot(q.projector * state));
            }
            if (weight == 0.0) continue; // never post-selected
            const std::vector<double> abl = abl_probability(TwoStateVector(state, post.normalized()), meas);
            for (std::size_t n = 0; n < abl.size(); ++n) {
                averaged[n] += weight * abl[n];
            }
        }
    }

    BornReduction out;
    for (std::size_t n = 0; n < born.size(); ++n) {
        out.max_deviation = std::max(out.max_deviation, std::abs(averaged[n] - born[n]));
    }
    out.agrees = out.max_deviation < tolerance;
    return out;
}

} // namespace tbreak::tsvf
