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

#include <doctest.h>

#include <cmath>
#include <fstream>
#include <sstream>

#include "qmeas/error.hpp"
#include "qmeas/opmeasure.hpp"

using namespace qmeas;
using cplx = std::complex<double>;

namespace {

ErrorKind kind_of(auto &&fn) {
    try {
        fn();
    } catch (const Error &e) {
        return e.kind();
    }
    FAIL("no error thrown");
    return ErrorKind::ConfigError;
}

// Smeared three-level measurement built straight from its smearing matrix.
FiniteOperationMeasure smeared() {
    const double G[3][3] = {{0.8, 0.1, 0.0}, {0.2, 0.8, 0.2}, {0.0, 0.1, 0.8}};
    std::vector<std::vector<Matrix>> kraus;
    for (int a = 0; a < 3; ++a) {
        Matrix m = Matrix::Zero(3, 3);
        for (int j = 0; j < 3; ++j) {
            m(j, j) = std::sqrt(G[a][j]);
        }
        kraus.push_back({m});
    }
    return FiniteOperationMeasure({"left", "middle", "right"}, kraus);
}

Vector basis(Eigen::Index d, Eigen::Index i) {
    Vector v = Vector::Zero(d);
    v(i) = 1.0;
    return v;
}

}  // namespace

TEST_SUITE("opmeasure") {
    TEST_CASE("density operator validation") {
        Matrix rho(2, 2);
        rho << 0.5, 0.0, 0.0, 0.4;
        CHECK(kind_of([&] { DensityOperator{rho}; }) == ErrorKind::NormalizationViolation);
        rho << 0.5, 0.3, 0.1, 0.5;
        CHECK(kind_of([&] { DensityOperator{rho}; }) == ErrorKind::DomainError);
        rho << 1.2, 0.0, 0.0, -0.2;
        CHECK(kind_of([&] { DensityOperator{rho}; }) == ErrorKind::DomainError);
        CHECK(kind_of([] { DensityOperator::pure(Vector::Zero(3)); }) == ErrorKind::DomainError);
        const DensityOperator p = DensityOperator::pure(Vector::Ones(4));
        CHECK(p.purity() == doctest::Approx(1.0));
        CHECK(p.matrix()(1, 2).real() == doctest::Approx(0.25));
        rho << 0.5, 0.0, 0.0, 0.5;
        CHECK(DensityOperator(rho).purity() == doctest::Approx(0.5));
    }

    TEST_CASE("construction rules") {
        Matrix half = Matrix::Identity(2, 2) * std::sqrt(0.5);
        CHECK(kind_of([&] { FiniteOperationMeasure({"a"}, {{half}}); }) == ErrorKind::NormalizationViolation);
        CHECK(kind_of([&] { FiniteOperationMeasure({"a", "a"}, {{half}, {half}}); }) == ErrorKind::DomainError);
        const FiniteOperationMeasure ok({"a", "b"}, {{half}, {half}});
        CHECK(ok.index_of("b") == 1);
        CHECK(kind_of([&] { ok.index_of("c"); }) == ErrorKind::UnknownOutcome);
        CHECK(kind_of([&] { ok.kraus(5); }) == ErrorKind::UnknownOutcome);
    }

    TEST_CASE("probabilities and posteriors") {
        const FiniteOperationMeasure om = smeared();
        const DensityOperator rho = DensityOperator::pure(basis(3, 1));
        CHECK(probability(om, 0, rho) == doctest::Approx(0.1));
        CHECK(probability(om, 1, rho) == doctest::Approx(0.8));
        const DensityOperator post = posterior(om, 1, rho);
        CHECK(std::abs(post.matrix()(1, 1) - 1.0) < 1e-12);
        const DensityOperator edge = DensityOperator::pure(basis(3, 0));
        CHECK(kind_of([&] { posterior(om, 2, edge); }) == ErrorKind::ZeroProbabilityOutcome);
        CHECK(kind_of([&] { subensemble_state(om, {2}, edge); }) == ErrorKind::ZeroProbabilitySet);
        CHECK(kind_of([&] { subensemble_state(om, {}, edge); }) == ErrorKind::ZeroProbabilitySet);
        // the full set keeps the (decohered) state
        const DensityOperator all = subensemble_state(om, {0, 1, 2}, edge);
        CHECK(std::abs(all.matrix().trace() - 1.0) < 1e-12);
        CHECK(kind_of([&] { apply(om, {7}, rho); }) == ErrorKind::UnknownOutcome);

        // mixed input: posterior of a maximally mixed state is diagonal G[1][j] / 1.2
        const DensityOperator mixed{Matrix::Identity(3, 3) / 3.0};
        const DensityOperator mid = posterior(om, 1, mixed);
        CHECK(mid.matrix()(0, 0).real() == doctest::Approx(0.2 / 1.2));
        CHECK(mid.matrix()(1, 1).real() == doctest::Approx(0.8 / 1.2));
    }

    TEST_CASE("effects sum to the identity") {
        std::mt19937_64 rng(11);
        const FiniteOperationMeasure om = random_operation_measure(rng, 4, 5, 2);
        const EffectMeasure e = effect_measure(om);
        Matrix sum = Matrix::Zero(4, 4);
        for (const Matrix &m : e.effects) {
            sum += m;
            CHECK((m - m.adjoint()).norm() < 1e-12);
            Eigen::SelfAdjointEigenSolver<Matrix> es(m);
            CHECK(es.eigenvalues().minCoeff() > -1e-12);
        }
        CHECK((sum - Matrix::Identity(4, 4)).norm() < 1e-12);
        CHECK(om.labels().front() == "a0");
    }

    TEST_CASE("Choi test") {
        const auto identity = [](const Matrix &m) { return m; };
        const Matrix c = choi_matrix(identity, 3);
        Eigen::SelfAdjointEigenSolver<Matrix> es(c);
        CHECK(es.eigenvalues()(8) == doctest::Approx(3.0));
        CHECK(std::abs(es.eigenvalues()(0)) < 1e-12);
        CHECK(is_completely_positive(smeared()).completely_positive);

        const RawLinearMap transpose{2, {[](const Matrix &m) { return Matrix(m.transpose()); }}};
        const CpCertificate cert = is_completely_positive(transpose);
        CHECK_FALSE(cert.completely_positive);
        CHECK(cert.min_eigenvalue == doctest::Approx(-1.0));
        REQUIRE(cert.witness.has_value());
        const Matrix choi = choi_matrix(transpose.maps[0], 2);
        const cplx w = cert.witness->dot(choi * *cert.witness);
        CHECK(w.real() == doctest::Approx(-1.0 * cert.witness->squaredNorm()));
    }

    TEST_CASE("weak repeatability") {
        const std::vector<DensityOperator> tests = {DensityOperator::pure(basis(3, 0)),
                                                    DensityOperator::pure(basis(3, 1)),
                                                    DensityOperator::pure(Vector::Ones(3))};
        CHECK(check_weak_repeatability(von_neumann_discrete(3), tests).passed);
        const RepeatabilityReport r = check_weak_repeatability(smeared(), tests);
        CHECK_FALSE(r.passed);
        // rho = |1><1|, B = C = {middle}: 0.8 against 0.8^2
        CHECK(r.max_violation >= 0.16 - 1e-12);
        CHECK_FALSE(r.worst_b.empty());
    }

    TEST_CASE("dilation") {
        std::mt19937_64 rng(5);
        for (int trial = 0; trial < 5; ++trial) {
            const FiniteOperationMeasure om = random_operation_measure(rng, 3, 4, 2);
            const Realization r = dilate(om);
            CHECK(r.probe_dim == 8);
            CHECK(unitarity_defect(r) < 1e-10);
            Vector psi = Vector::Random(3);
            psi.normalize();
            const DensityOperator rho = DensityOperator::pure(psi);
            const RealizationStatistics st = realization_statistics(r, psi);
            for (std::size_t a = 0; a < om.size(); ++a) {
                CHECK(std::abs(st.probabilities[a] - probability(om, a, rho)) < 1e-10);
                REQUIRE(st.posteriors[a].has_value());
                CHECK((st.posteriors[a]->matrix() - posterior(om, a, rho).matrix()).norm() < 1e-10);
            }
        }
        Matrix zero = Matrix::Zero(2, 2);
        const FiniteOperationMeasure deg({"a", "b"}, {{Matrix::Identity(2, 2)}, {zero}});
        CHECK(kind_of([&] { dilate(deg); }) == ErrorKind::DegenerateKraus);
    }

    TEST_CASE("von Neumann joint distribution") {
        for (Eigen::Index d : {2, 3}) {
            const Realization r = dilate(von_neumann_discrete(d));
            Vector psi(d);
            for (Eigen::Index j = 0; j < d; ++j) {
                psi(j) = cplx(1.0 + j, 0.5 * j);
            }
            psi.normalize();
            const Eigen::MatrixXd joint = joint_distribution(r, psi);
            for (Eigen::Index j = 0; j < d; ++j) {
                for (Eigen::Index a = 0; a < d; ++a) {
                    const double want = j == a ? std::norm(psi(j)) : 0.0;
                    CHECK(std::abs(joint(j, a) - want) < 1e-12);
                }
            }
        }
    }

    TEST_CASE("text round trip") {
        std::mt19937_64 rng(3);
        const FiniteOperationMeasure om = random_operation_measure(rng, 2, 3, 2);
        std::stringstream buf;
        write_measure(buf, om);
        const FiniteOperationMeasure back = read_measure(buf);
        REQUIRE(back.size() == om.size());
        for (std::size_t a = 0; a < om.size(); ++a) {
            CHECK(back.label(a) == om.label(a));
            for (std::size_t k = 0; k < om.kraus(a).size(); ++k) {
                CHECK((back.kraus(a)[k] - om.kraus(a)[k]).norm() < 1e-15);
            }
        }

        std::ifstream file(std::string(QMEAS_SOURCE_DIR) + "/configs/smeared3.kraus");
        REQUIRE(file.good());
        const FiniteOperationMeasure disk = read_measure(file);
        CHECK(disk.labels() == std::vector<std::string>{"left", "middle", "right"});

        std::istringstream bad("outcome a\n2 2\n1,0 0,0\n0,0 x,1\n");
        try {
            read_measure(bad);
            FAIL("malformed measure accepted");
        } catch (const Error &e) {
            CHECK(e.kind() == ErrorKind::ConfigError);
            CHECK(std::string(e.what()).find("line 4") != std::string::npos);
        }
    }
}
