// Copyright 2026 The qmeas Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Operation measures on a finite-dimensional Hilbert space.
//
// A FiniteOperationMeasure assigns to each outcome a a family of Kraus
// operators {M_ak}; the operation for an outcome set B is
// rho -> sum_{a in B, k} M_ak rho M_ak^dagger. Because the type only admits
// Kraus form it is completely positive by construction; arbitrary linear
// maps go through RawLinearMap, which exists for the Choi test.
//
// `dilate` builds the probe, unitary coupling and probe projectors that
// reproduce a measure exactly: U (psi (x) phi) = sum_{a,k} M_ak psi (x) |a,k>.

#pragma once

#include <Eigen/Dense>
#include <functional>
#include <iosfwd>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace qmeas {

using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;

inline constexpr double kPsdTolerance = 1e-10;

class DensityOperator {
   public:
    /// Hermitian within 1e-12, eigenvalues >= -1e-10, unit trace within 1e-10.
    explicit DensityOperator(Matrix rho);
    static DensityOperator pure(const Vector &psi);

    const Matrix &matrix() const { return rho_; }
    Eigen::Index dim() const { return rho_.rows(); }
    double purity() const;

   private:
    Matrix rho_;
};

class FiniteOperationMeasure {
   public:
    /// NormalizationViolation unless sum_{a,k} M^dagger M = 1 within 1e-10.
    FiniteOperationMeasure(std::vector<std::string> labels, std::vector<std::vector<Matrix>> kraus);

    Eigen::Index dim() const { return dim_; }
    std::size_t size() const { return labels_.size(); }
    const std::string &label(std::size_t outcome) const { return labels_.at(outcome); }
    const std::vector<std::string> &labels() const { return labels_; }
    /// UnknownOutcome for a label that is not present.
    std::size_t index_of(const std::string &label) const;
    const std::vector<Matrix> &kraus(std::size_t outcome) const;

   private:
    Eigen::Index dim_ = 0;
    std::vector<std::string> labels_;
    std::vector<std::vector<Matrix>> kraus_;
};

using OutcomeSet = std::vector<std::size_t>;

/// I(B) applied to an arbitrary operator.
Matrix apply(const FiniteOperationMeasure &om, const OutcomeSet &outcomes, const Matrix &op);
Matrix apply(const FiniteOperationMeasure &om, const OutcomeSet &outcomes, const DensityOperator &rho);

double probability(const FiniteOperationMeasure &om, std::size_t outcome, const DensityOperator &rho);
/// ZeroProbabilityOutcome when the outcome cannot occur.
DensityOperator posterior(const FiniteOperationMeasure &om, std::size_t outcome, const DensityOperator &rho);
/// ZeroProbabilitySet when Tr[I(B) rho] = 0.
DensityOperator subensemble_state(const FiniteOperationMeasure &om, const OutcomeSet &outcomes,
                                  const DensityOperator &rho);

struct EffectMeasure {
    std::vector<Matrix> effects;
};

EffectMeasure effect_measure(const FiniteOperationMeasure &om);

/// Outcome-indexed linear maps with no structural guarantee.
struct RawLinearMap {
    Eigen::Index dim = 0;
    std::vector<std::function<Matrix(const Matrix &)>> maps;
};

RawLinearMap as_raw_map(const FiniteOperationMeasure &om);

/// Choi matrix sum_{ij} |i><j| (x) map(|i><j|).
Matrix choi_matrix(const std::function<Matrix(const Matrix &)> &map, Eigen::Index dim);

struct CpCertificate {
    bool completely_positive = true;
    /// smallest Choi eigenvalue seen over all outcomes
    double min_eigenvalue = 0.0;
    std::size_t outcome = 0;
    /// eigenvector for `min_eigenvalue` when the test fails
    std::optional<Vector> witness;
};

CpCertificate is_completely_positive(const FiniteOperationMeasure &om);
CpCertificate is_completely_positive(const RawLinearMap &map);

struct RepeatabilityReport {
    bool passed = true;
    double max_violation = 0.0;
    OutcomeSet worst_b;
    OutcomeSet worst_c;
};

/// Compares Tr[I(B n C) rho] with Tr[I(B) I(C) rho] over every pair of
/// outcome subsets (singletons, complements, empty and full set when there
/// are more than 8 outcomes).
RepeatabilityReport check_weak_repeatability(const FiniteOperationMeasure &om,
                                             const std::vector<DensityOperator> &test_densities,
                                             double tolerance = 1e-9);

/// Projective measurement in the computational basis, outcomes "x0".."x{d-1}".
FiniteOperationMeasure von_neumann_discrete(Eigen::Index dim);

/// Random Kraus-form measure with `rank` operators per outcome.
FiniteOperationMeasure random_operation_measure(std::mt19937_64 &rng, Eigen::Index dim, std::size_t outcomes,
                                                std::size_t rank);

struct Realization {
    Eigen::Index system_dim = 0;
    Eigen::Index probe_dim = 0;
    /// first probe basis vector
    Vector probe_state;
    /// acts on system (x) probe, system index major
    Matrix unitary;
    /// one projector on the probe space per outcome
    std::vector<Matrix> probe_projectors;
};

/// DegenerateKraus when an outcome's Kraus family is entirely zero.
Realization dilate(const FiniteOperationMeasure &om);

/// max |U^dagger U - 1|
double unitarity_defect(const Realization &r);

struct RealizationStatistics {
    std::vector<double> probabilities;
    /// empty for outcomes with zero probability
    std::vector<std::optional<DensityOperator>> posteriors;
};

RealizationStatistics realization_statistics(const Realization &r, const Vector &psi);
/// ZeroProbabilityOutcome when the outcome cannot occur.
DensityOperator realization_posterior(const Realization &r, const Vector &psi, std::size_t outcome);

/// P(X = x_j, A = a): system measured in the computational basis after the
/// coupling, jointly with the probe outcome. Rows j, columns a.
Eigen::MatrixXd joint_distribution(const Realization &r, const Vector &psi);

// Text format: a "rows cols" header line, then one row per line with cells
// "re,im" separated by whitespace. '#' starts a comment.
void write_matrix(std::ostream &out, const Matrix &m);
/// ConfigError with the line number on malformed input.
Matrix read_matrix(std::istream &in);

// Measure files repeat "outcome <label>" followed by one or more matrices.
void write_measure(std::ostream &out, const FiniteOperationMeasure &om);
FiniteOperationMeasure read_measure(std::istream &in);

}  // namespace qmeas
