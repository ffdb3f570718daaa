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

#include "qmeas/opmeasure.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <iomanip>
#include <istream>
#include <iterator>
#include <limits>
#include <ostream>
#include <sstream>

#include "qmeas/error.hpp"

namespace qmeas {

using cplx = std::complex<double>;

namespace {

constexpr double kHermitianTolerance = 1e-12;
constexpr double kTraceTolerance = 1e-10;
constexpr double kCompletenessTolerance = 1e-10;

OutcomeSet canonical(const FiniteOperationMeasure &om, OutcomeSet set) {
    std::sort(set.begin(), set.end());
    set.erase(std::unique(set.begin(), set.end()), set.end());
    for (std::size_t a : set) {
        if (a >= om.size()) {
            throw Error(ErrorKind::UnknownOutcome, "outcome index " + std::to_string(a) + " out of range");
        }
    }
    return set;
}

OutcomeSet intersection(const OutcomeSet &b, const OutcomeSet &c) {
    OutcomeSet out;
    std::set_intersection(b.begin(), b.end(), c.begin(), c.end(), std::back_inserter(out));
    return out;
}

std::vector<OutcomeSet> subset_family(std::size_t k) {
    std::vector<OutcomeSet> family;
    if (k <= 8) {
        for (std::size_t mask = 0; mask < (std::size_t{1} << k); ++mask) {
            OutcomeSet s;
            for (std::size_t a = 0; a < k; ++a) {
                if (mask & (std::size_t{1} << a)) {
                    s.push_back(a);
                }
            }
            family.push_back(std::move(s));
        }
        return family;
    }
    OutcomeSet all(k);
    for (std::size_t a = 0; a < k; ++a) {
        all[a] = a;
    }
    family.push_back({});
    family.push_back(all);
    for (std::size_t a = 0; a < k; ++a) {
        family.push_back({a});
        OutcomeSet complement;
        for (std::size_t b = 0; b < k; ++b) {
            if (b != a) {
                complement.push_back(b);
            }
        }
        family.push_back(std::move(complement));
    }
    return family;
}

Vector kron(const Vector &a, const Vector &b) {
    Vector out(a.size() * b.size());
    for (Eigen::Index i = 0; i < a.size(); ++i) {
        out.segment(i * b.size(), b.size()) = a(i) * b;
    }
    return out;
}

// Orthonormal completion of the filled columns of `u` by sweeping the
// standard basis in order; Gram-Schmidt is applied twice per candidate.
void complete_unitary(Matrix &u, const std::vector<bool> &filled) {
    const Eigen::Index n = u.rows();
    std::vector<Eigen::Index> basis;
    std::vector<Eigen::Index> free_slots;
    for (Eigen::Index c = 0; c < n; ++c) {
        (filled[static_cast<std::size_t>(c)] ? basis : free_slots).push_back(c);
    }
    std::size_t next_slot = 0;
    for (Eigen::Index e = 0; e < n && next_slot < free_slots.size(); ++e) {
        Vector v = Vector::Zero(n);
        v(e) = 1.0;
        for (int pass = 0; pass < 2; ++pass) {
            for (Eigen::Index c : basis) {
                v -= u.col(c) * u.col(c).dot(v);
            }
        }
        const double nv = v.norm();
        if (nv < 1e-6) {
            continue;
        }
        const Eigen::Index slot = free_slots[next_slot++];
        u.col(slot) = v / nv;
        basis.push_back(slot);
    }
}

// (1 (x) Pi_a) U (psi (x) phi), reshaped to system rows x probe columns
Matrix projected_joint(const Realization &r, std::size_t outcome, const Vector &psi) {
    if (psi.size() != r.system_dim) {
        throw Error(ErrorKind::DomainError, "input vector has the wrong dimension");
    }
    if (outcome >= r.probe_projectors.size()) {
        throw Error(ErrorKind::UnknownOutcome, "outcome index " + std::to_string(outcome) + " out of range");
    }
    Vector joint = r.unitary * kron(psi, r.probe_state);
    Matrix a(r.system_dim, r.probe_dim);
    for (Eigen::Index s = 0; s < r.system_dim; ++s) {
        for (Eigen::Index p = 0; p < r.probe_dim; ++p) {
            a(s, p) = joint(s * r.probe_dim + p);
        }
    }
    return a * r.probe_projectors[outcome].transpose();
}

CpCertificate certify(const std::vector<std::function<Matrix(const Matrix &)>> &maps, Eigen::Index dim) {
    CpCertificate cert;
    cert.min_eigenvalue = std::numeric_limits<double>::infinity();
    for (std::size_t a = 0; a < maps.size(); ++a) {
        Matrix c = choi_matrix(maps[a], dim);
        if ((c - c.adjoint()).cwiseAbs().maxCoeff() > kPsdTolerance) {
            // a map that does not preserve hermiticity cannot be positive
            cert.completely_positive = false;
            cert.outcome = a;
            cert.min_eigenvalue = -std::numeric_limits<double>::infinity();
            cert.witness.reset();
            return cert;
        }
        Eigen::SelfAdjointEigenSolver<Matrix> eig(0.5 * (c + c.adjoint()));
        const double lowest = eig.eigenvalues()(0);
        if (lowest < cert.min_eigenvalue) {
            cert.min_eigenvalue = lowest;
            cert.outcome = a;
            if (lowest < -kPsdTolerance) {
                cert.completely_positive = false;
                cert.witness = eig.eigenvectors().col(0);
            }
        }
    }
    return cert;
}

// '#' comments and blank lines are skipped; returns false at end of input
bool next_content_line(std::istream &in, std::string &line, int &line_no) {
    while (std::getline(in, line)) {
        ++line_no;
        auto hash = line.find('#');
        if (hash != std::string::npos) {
            line.erase(hash);
        }
        if (line.find_first_not_of(" \t\r") != std::string::npos) {
            return true;
        }
    }
    return false;
}

[[noreturn]] void parse_error(int line_no, const std::string &what) {
    throw Error(ErrorKind::ConfigError, "line " + std::to_string(line_no) + ": " + what);
}

Matrix read_matrix_body(std::istream &in, const std::string &header, int &line_no) {
    std::istringstream hs(header);
    long rows = 0, cols = 0;
    std::string extra;
    if (!(hs >> rows >> cols) || (hs >> extra) || rows <= 0 || cols <= 0) {
        parse_error(line_no, "expected matrix header 'rows cols'");
    }
    Matrix m(rows, cols);
    std::string line;
    for (long r = 0; r < rows; ++r) {
        if (!next_content_line(in, line, line_no)) {
            parse_error(line_no, "matrix ends after " + std::to_string(r) + " of " + std::to_string(rows) + " rows");
        }
        std::istringstream ls(line);
        std::string cell;
        long c = 0;
        while (ls >> cell) {
            auto comma = cell.find(',');
            if (comma == std::string::npos || c >= cols) {
                parse_error(line_no, "expected " + std::to_string(cols) + " cells of the form re,im");
            }
            try {
                std::size_t used_re = 0, used_im = 0;
                const std::string re_text = cell.substr(0, comma);
                const std::string im_text = cell.substr(comma + 1);
                double re = std::stod(re_text, &used_re);
                double im = std::stod(im_text, &used_im);
                if (used_re != re_text.size() || used_im != im_text.size()) {
                    throw std::invalid_argument(cell);
                }
                m(r, c++) = cplx(re, im);
            } catch (const std::logic_error &) {
                parse_error(line_no, "cannot read complex cell '" + cell + "'");
            }
        }
        if (c != cols) {
            parse_error(line_no, "expected " + std::to_string(cols) + " cells, found " + std::to_string(c));
        }
    }
    return m;
}

}  // namespace

// ---------------------------------------------------------------- states

DensityOperator::DensityOperator(Matrix rho) : rho_(std::move(rho)) {
    if (rho_.rows() != rho_.cols() || rho_.rows() == 0) {
        throw Error(ErrorKind::DomainError, "density operator must be a nonempty square matrix");
    }
    if ((rho_ - rho_.adjoint()).cwiseAbs().maxCoeff() > kHermitianTolerance) {
        throw Error(ErrorKind::DomainError, "density operator is not Hermitian");
    }
    if (std::abs(rho_.trace() - cplx(1.0)) > kTraceTolerance) {
        throw Error(ErrorKind::NormalizationViolation, "density operator trace differs from 1");
    }
    Eigen::SelfAdjointEigenSolver<Matrix> eig(rho_, Eigen::EigenvaluesOnly);
    if (eig.eigenvalues()(0) < -kPsdTolerance) {
        throw Error(ErrorKind::DomainError, "density operator has a negative eigenvalue");
    }
}

DensityOperator DensityOperator::pure(const Vector &psi) {
    const double n = psi.norm();
    if (!(n > 0.0)) {
        throw Error(ErrorKind::DomainError, "cannot build a state from the zero vector");
    }
    Vector u = psi / n;
    return DensityOperator(u * u.adjoint());
}

double DensityOperator::purity() const { return (rho_ * rho_).trace().real(); }

// ---------------------------------------------------------------- measures

FiniteOperationMeasure::FiniteOperationMeasure(std::vector<std::string> labels, std::vector<std::vector<Matrix>> kraus)
    : labels_(std::move(labels)), kraus_(std::move(kraus)) {
    if (labels_.empty() || labels_.size() != kraus_.size()) {
        throw Error(ErrorKind::DomainError, "need one Kraus family per outcome label");
    }
    for (std::size_t i = 0; i < labels_.size(); ++i) {
        for (std::size_t j = i + 1; j < labels_.size(); ++j) {
            if (labels_[i] == labels_[j]) {
                throw Error(ErrorKind::DomainError, "duplicate outcome label '" + labels_[i] + "'");
            }
        }
    }
    for (const auto &family : kraus_) {
        for (const auto &m : family) {
            if (dim_ == 0) {
                dim_ = m.rows();
            }
            if (m.rows() != dim_ || m.cols() != dim_) {
                throw Error(ErrorKind::DomainError, "Kraus operators must be square and of equal size");
            }
        }
    }
    if (dim_ == 0) {
        throw Error(ErrorKind::DomainError, "measure has no Kraus operators");
    }
    Matrix total = Matrix::Zero(dim_, dim_);
    for (const auto &family : kraus_) {
        for (const auto &m : family) {
            total += m.adjoint() * m;
        }
    }
    double defect = (total - Matrix::Identity(dim_, dim_)).cwiseAbs().maxCoeff();
    if (defect > kCompletenessTolerance) {
        std::ostringstream msg;
        msg << "sum of M^dagger M differs from the identity by " << defect;
        throw Error(ErrorKind::NormalizationViolation, msg.str());
    }
}

std::size_t FiniteOperationMeasure::index_of(const std::string &label) const {
    auto it = std::find(labels_.begin(), labels_.end(), label);
    if (it == labels_.end()) {
        throw Error(ErrorKind::UnknownOutcome, "no outcome labelled '" + label + "'");
    }
    return static_cast<std::size_t>(it - labels_.begin());
}

const std::vector<Matrix> &FiniteOperationMeasure::kraus(std::size_t outcome) const {
    if (outcome >= kraus_.size()) {
        throw Error(ErrorKind::UnknownOutcome, "outcome index " + std::to_string(outcome) + " out of range");
    }
    return kraus_[outcome];
}

Matrix apply(const FiniteOperationMeasure &om, const OutcomeSet &outcomes, const Matrix &op) {
    Matrix out = Matrix::Zero(om.dim(), om.dim());
    for (std::size_t a : canonical(om, outcomes)) {
        for (const auto &m : om.kraus(a)) {
            out += m * op * m.adjoint();
        }
    }
    return out;
}

Matrix apply(const FiniteOperationMeasure &om, const OutcomeSet &outcomes, const DensityOperator &rho) {
    return apply(om, outcomes, rho.matrix());
}

double probability(const FiniteOperationMeasure &om, std::size_t outcome, const DensityOperator &rho) {
    return apply(om, {outcome}, rho).trace().real();
}

DensityOperator posterior(const FiniteOperationMeasure &om, std::size_t outcome, const DensityOperator &rho) {
    Matrix out = apply(om, {outcome}, rho);
    const double p = out.trace().real();
    if (!(p > 0.0)) {
        throw Error(ErrorKind::ZeroProbabilityOutcome, "outcome '" + om.label(outcome) + "' has zero probability");
    }
    return DensityOperator(out / p);
}

DensityOperator subensemble_state(const FiniteOperationMeasure &om, const OutcomeSet &outcomes,
                                  const DensityOperator &rho) {
    Matrix out = apply(om, outcomes, rho);
    const double p = out.trace().real();
    if (!(p > 0.0)) {
        throw Error(ErrorKind::ZeroProbabilitySet, "outcome set has zero probability");
    }
    return DensityOperator(out / p);
}

EffectMeasure effect_measure(const FiniteOperationMeasure &om) {
    EffectMeasure out;
    for (std::size_t a = 0; a < om.size(); ++a) {
        Matrix f = Matrix::Zero(om.dim(), om.dim());
        for (const auto &m : om.kraus(a)) {
            f += m.adjoint() * m;
        }
        out.effects.push_back(std::move(f));
    }
    return out;
}

RawLinearMap as_raw_map(const FiniteOperationMeasure &om) {
    RawLinearMap raw;
    raw.dim = om.dim();
    for (std::size_t a = 0; a < om.size(); ++a) {
        raw.maps.emplace_back([&om, a](const Matrix &x) { return apply(om, {a}, x); });
    }
    return raw;
}

Matrix choi_matrix(const std::function<Matrix(const Matrix &)> &map, Eigen::Index dim) {
    Matrix c = Matrix::Zero(dim * dim, dim * dim);
    for (Eigen::Index i = 0; i < dim; ++i) {
        for (Eigen::Index j = 0; j < dim; ++j) {
            Matrix unit = Matrix::Zero(dim, dim);
            unit(i, j) = 1.0;
            c.block(i * dim, j * dim, dim, dim) = map(unit);
        }
    }
    return c;
}

CpCertificate is_completely_positive(const FiniteOperationMeasure &om) {
    return certify(as_raw_map(om).maps, om.dim());
}

CpCertificate is_completely_positive(const RawLinearMap &map) { return certify(map.maps, map.dim); }

RepeatabilityReport check_weak_repeatability(const FiniteOperationMeasure &om,
                                             const std::vector<DensityOperator> &test_densities, double tolerance) {
    RepeatabilityReport report;
    const auto family = subset_family(om.size());
    for (const auto &rho : test_densities) {
        for (const auto &b : family) {
            for (const auto &c : family) {
                const double joint = apply(om, intersection(b, c), rho).trace().real();
                const double sequential = apply(om, b, apply(om, c, rho)).trace().real();
                const double violation = std::abs(joint - sequential);
                if (violation > report.max_violation) {
                    report.max_violation = violation;
                    report.worst_b = b;
                    report.worst_c = c;
                }
            }
        }
    }
    report.passed = report.max_violation <= tolerance;
    return report;
}

FiniteOperationMeasure von_neumann_discrete(Eigen::Index dim) {
    if (dim < 2) {
        throw Error(ErrorKind::DomainError, "discrete von Neumann measure needs dim >= 2");
    }
    std::vector<std::string> labels;
    std::vector<std::vector<Matrix>> kraus;
    for (Eigen::Index i = 0; i < dim; ++i) {
        Matrix p = Matrix::Zero(dim, dim);
        p(i, i) = 1.0;
        labels.push_back("x" + std::to_string(i));
        kraus.push_back({p});
    }
    return FiniteOperationMeasure(std::move(labels), std::move(kraus));
}

FiniteOperationMeasure random_operation_measure(std::mt19937_64 &rng, Eigen::Index dim, std::size_t outcomes,
                                                std::size_t rank) {
    if (dim < 1 || outcomes < 1 || rank < 1) {
        throw Error(ErrorKind::DomainError, "random measure needs positive dim, outcomes and rank");
    }
    std::normal_distribution<double> gauss;
    std::vector<std::vector<Matrix>> raw(outcomes);
    Matrix total = Matrix::Zero(dim, dim);
    for (auto &family : raw) {
        for (std::size_t k = 0; k < rank; ++k) {
            Matrix a(dim, dim);
            for (Eigen::Index i = 0; i < dim; ++i) {
                for (Eigen::Index j = 0; j < dim; ++j) {
                    a(i, j) = cplx(gauss(rng), gauss(rng));
                }
            }
            total += a.adjoint() * a;
            family.push_back(std::move(a));
        }
    }
    // M = A S^{-1/2} with S = sum A^dagger A gives sum M^dagger M = 1
    Eigen::SelfAdjointEigenSolver<Matrix> eig(total);
    Matrix inv_sqrt = eig.eigenvectors() * eig.eigenvalues().cwiseInverse().cwiseSqrt().asDiagonal() *
                      eig.eigenvectors().adjoint();
    std::vector<std::string> labels;
    for (std::size_t a = 0; a < outcomes; ++a) {
        labels.push_back("a" + std::to_string(a));
        for (auto &m : raw[a]) {
            m = m * inv_sqrt;
        }
    }
    return FiniteOperationMeasure(std::move(labels), std::move(raw));
}

// ---------------------------------------------------------------- dilation

Realization dilate(const FiniteOperationMeasure &om) {
    const Eigen::Index d = om.dim();
    const auto outcomes = static_cast<Eigen::Index>(om.size());
    Eigen::Index rank = 0;
    for (std::size_t a = 0; a < om.size(); ++a) {
        const auto &family = om.kraus(a);
        bool all_zero = std::all_of(family.begin(), family.end(), [](const Matrix &m) { return m.isZero(0.0); });
        if (all_zero) {
            throw Error(ErrorKind::DegenerateKraus, "outcome '" + om.label(a) + "' has only zero Kraus operators");
        }
        rank = std::max(rank, static_cast<Eigen::Index>(family.size()));
    }

    Realization r;
    r.system_dim = d;
    r.probe_dim = outcomes * rank;
    const Eigen::Index total = d * r.probe_dim;
    r.probe_state = Vector::Zero(r.probe_dim);
    r.probe_state(0) = 1.0;

    // column (i, probe 0) of U is the isometry image sum_{a,k} M_ak e_i (x) |a,k>
    r.unitary = Matrix::Zero(total, total);
    std::vector<bool> filled(static_cast<std::size_t>(total), false);
    for (Eigen::Index i = 0; i < d; ++i) {
        const Eigen::Index col = i * r.probe_dim;
        for (Eigen::Index a = 0; a < outcomes; ++a) {
            const auto &family = om.kraus(static_cast<std::size_t>(a));
            for (Eigen::Index k = 0; k < static_cast<Eigen::Index>(family.size()); ++k) {
                const Eigen::Index probe_index = a * rank + k;
                for (Eigen::Index s = 0; s < d; ++s) {
                    r.unitary(s * r.probe_dim + probe_index, col) = family[static_cast<std::size_t>(k)](s, i);
                }
            }
        }
        filled[static_cast<std::size_t>(col)] = true;
    }
    complete_unitary(r.unitary, filled);

    for (Eigen::Index a = 0; a < outcomes; ++a) {
        Matrix proj = Matrix::Zero(r.probe_dim, r.probe_dim);
        for (Eigen::Index k = 0; k < rank; ++k) {
            proj(a * rank + k, a * rank + k) = 1.0;
        }
        r.probe_projectors.push_back(std::move(proj));
    }
    return r;
}

double unitarity_defect(const Realization &r) {
    const Eigen::Index n = r.unitary.rows();
    return (r.unitary.adjoint() * r.unitary - Matrix::Identity(n, n)).cwiseAbs().maxCoeff();
}

RealizationStatistics realization_statistics(const Realization &r, const Vector &psi) {
    RealizationStatistics stats;
    const Vector unit = psi / psi.norm();
    for (std::size_t a = 0; a < r.probe_projectors.size(); ++a) {
        Matrix proj = projected_joint(r, a, unit);
        const double p = proj.squaredNorm();
        stats.probabilities.push_back(p);
        if (p > 0.0) {
            stats.posteriors.emplace_back(DensityOperator(proj * proj.adjoint() / p));
        } else {
            stats.posteriors.emplace_back(std::nullopt);
        }
    }
    return stats;
}

DensityOperator realization_posterior(const Realization &r, const Vector &psi, std::size_t outcome) {
    Matrix proj = projected_joint(r, outcome, psi / psi.norm());
    const double p = proj.squaredNorm();
    if (!(p > 0.0)) {
        throw Error(ErrorKind::ZeroProbabilityOutcome, "outcome " + std::to_string(outcome) + " has zero probability");
    }
    return DensityOperator(proj * proj.adjoint() / p);
}

Eigen::MatrixXd joint_distribution(const Realization &r, const Vector &psi) {
    const Vector unit = psi / psi.norm();
    Eigen::MatrixXd out(r.system_dim, static_cast<Eigen::Index>(r.probe_projectors.size()));
    for (std::size_t a = 0; a < r.probe_projectors.size(); ++a) {
        Matrix proj = projected_joint(r, a, unit);
        out.col(static_cast<Eigen::Index>(a)) = proj.rowwise().squaredNorm();
    }
    return out;
}

// ---------------------------------------------------------------- text format

void write_matrix(std::ostream &out, const Matrix &m) {
    const auto old_precision = out.precision(std::numeric_limits<double>::max_digits10);
    out << m.rows() << ' ' << m.cols() << '\n';
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        for (Eigen::Index c = 0; c < m.cols(); ++c) {
            out << (c ? " " : "") << m(r, c).real() << ',' << m(r, c).imag();
        }
        out << '\n';
    }
    out.precision(old_precision);
}

Matrix read_matrix(std::istream &in) {
    int line_no = 0;
    std::string header;
    if (!next_content_line(in, header, line_no)) {
        parse_error(line_no, "missing matrix header");
    }
    return read_matrix_body(in, header, line_no);
}

void write_measure(std::ostream &out, const FiniteOperationMeasure &om) {
    for (std::size_t a = 0; a < om.size(); ++a) {
        out << "outcome " << om.label(a) << '\n';
        for (const auto &m : om.kraus(a)) {
            write_matrix(out, m);
        }
    }
}

FiniteOperationMeasure read_measure(std::istream &in) {
    int line_no = 0;
    std::string line;
    std::vector<std::string> labels;
    std::vector<std::vector<Matrix>> kraus;
    while (next_content_line(in, line, line_no)) {
        std::istringstream ls(line);
        std::string word;
        ls >> word;
        if (word == "outcome") {
            std::string label;
            if (!(ls >> label)) {
                parse_error(line_no, "outcome needs a label");
            }
            labels.push_back(label);
            kraus.emplace_back();
            continue;
        }
        if (labels.empty()) {
            parse_error(line_no, "matrix before the first 'outcome' line");
        }
        kraus.back().push_back(read_matrix_body(in, line, line_no));
    }
    if (labels.empty()) {
        parse_error(line_no, "no outcomes found");
    }
    for (std::size_t a = 0; a < labels.size(); ++a) {
        if (kraus[a].empty()) {
            throw Error(ErrorKind::ConfigError, "outcome '" + labels[a] + "' has no Kraus matrices");
        }
    }
    try {
        return FiniteOperationMeasure(std::move(labels), std::move(kraus));
    } catch (const Error &e) {
        throw Error(ErrorKind::ConfigError, e.what());
    }
}

}  // namespace qmeas
