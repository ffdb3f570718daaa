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

// Acceptance checks. Prints one [PASS]/[FAIL] line per criterion and exits
// non-zero if any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <numbers>
#include <random>
#include <sstream>
#include <string>

#include "qmeas/error.hpp"
#include "qmeas/experiment.hpp"
#include "qmeas/grid.hpp"
#include "qmeas/models.hpp"
#include "qmeas/opmeasure.hpp"
#include "qmeas/tcs.hpp"

using namespace qmeas;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

double rel_err(double got, double want) { return std::abs(got - want) / std::abs(want); }

struct Outcome {
    bool passed;
    std::string detail;
};

int failures = 0;

void report(int id, const std::string &name, const std::function<Outcome()> &check) {
    Outcome o;
    try {
        o = check();
    } catch (const std::exception &e) {
        o = {false, std::string("exception: ") + e.what()};
    }
    if (!o.passed) {
        ++failures;
    }
    std::cout << (o.passed ? "[PASS]" : "[FAIL]") << " criterion " << id << ": " << name << " (" << o.detail << ")"
              << std::endl;
}

std::string fmt(double v) {
    std::ostringstream s;
    s.precision(6);
    s << v;
    return s.str();
}

// -------------------------------------------------------------- criteria

Outcome contraction_on_grid() {
    const auto t0 = Clock::now();
    const TcsParams p = make_tcs({std::sqrt(2.0), 0.0}, {0.0, 1.0});
    const double t = 2.0 * std::sqrt(2.0) / 3.0;
    const GridState s = discretize(p, Grid::standard());
    const double var = quadrature_moments(free_evolve(s, t)).var_x;
    const double err = rel_err(var, 1.0 / 6.0);
    const double elapsed = seconds_since(t0);
    return {err <= 1e-6 && elapsed < 1.0, "variance " + fmt(var) + ", rel err " + fmt(err) + ", " + fmt(elapsed) + " s"};
}

std::vector<TcsParams> sample_priors() {
    return {make_tcs(1.0, 0.0),
            make_tcs(1.0, 0.0, 1.5, -0.5, 2.0),
            tcs_with_xi(1.0, -0.7, 0.3),
            tcs_with_xi(-0.6, 0.2, 1.0, 0.8),
            make_tcs(cplx(1.25, 0.0), cplx(0.6, 0.45), 0.0, 0.4)};
}

Outcome von_neumann_error_measures() {
    const auto t0 = Clock::now();
    const Grid g = Grid::standard();
    double worst_prec = 0.0, worst_res = 0.0, worst_eps = 0.0;
    for (double dq : {0.05, 0.1, 0.5}) {
        const MeasurementModel m = VonNeumannModel(gaussian_state(g, 0.0, dq));
        for (const TcsParams &p : sample_priors()) {
            const GridState psi = discretize(p, g);
            const double eps = precision(m, psi);
            const double sig = resolution(m, psi);
            const double eps2 = readout_density(m, psi).variance() - quadrature_moments(psi).var_x;
            worst_prec = std::max(worst_prec, rel_err(eps, dq));
            worst_res = std::max(worst_res, rel_err(sig, dq));
            worst_eps = std::max(worst_eps, rel_err(eps2, eps * eps));
        }
    }
    const double elapsed = seconds_since(t0);
    const bool ok = worst_prec <= 1e-6 && worst_res <= 1e-6 && worst_eps <= 1e-6 && elapsed < 10.0;
    return {ok, "max rel err precision " + fmt(worst_prec) + ", resolution " + fmt(worst_res) + ", eps^2 identity " +
                    fmt(worst_eps) + ", " + fmt(elapsed) + " s"};
}

Outcome von_neumann_respects_limit() {
    const Grid g(-20.0, 20.0, 1024);
    std::mt19937_64 rng(20260301);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    double worst = 1e300;
    int count = 0;
    for (int pair = 0; pair < 50; ++pair) {
        const double sigma = 0.1 + 0.9 * unit(rng);
        const double s = 1.2 * unit(rng);
        const cplx mu = std::polar(std::sqrt(1.0 + s * s), 2.0 * std::numbers::pi * unit(rng));
        const cplx nu = std::polar(s, 2.0 * std::numbers::pi * unit(rng));
        const TcsParams p = make_tcs(mu, nu, 4.0 * unit(rng) - 2.0, 2.0 * unit(rng) - 1.0, 0.5 + 1.5 * unit(rng));
        const MeasurementModel m = VonNeumannModel(gaussian_state(g, 0.0, sigma));
        const GridState prior = discretize(p, g);
        for (double tau : {0.1, 1.0, 10.0}) {
            const ExperimentReport r = predictive_uncertainty_analytic(m, prior, tau, {0, AnalyticRoute::Moments});
            worst = std::min(worst, r.sql_ratio);
            ++count;
        }
    }
    return {worst >= 1.0 - 1e-6, std::to_string(count) + " cases, min sql_ratio " + fmt(worst)};
}

Outcome contractive_breach() {
    const Grid g = Grid::standard();
    const GridState prior = discretize(make_tcs(1.0, 0.0), g);
    bool ok = true;
    std::ostringstream detail;
    std::uint64_t seed = 1000;
    for (double x : {0.5, std::sqrt(2.0), 5.0, 25.0}) {
        const ContractiveGLModel cm(tcs_with_xi(x));
        const double tau = cm.contraction_time();
        const ExperimentReport r = predictive_uncertainty_analytic(cm, prior, tau);
        const double want = tau / (4.0 * x);
        const double err = rel_err(r.predictive_variance, want);
        ok = ok && err <= 1e-6;
        if (x == 25.0) {
            ok = ok && std::abs(r.sql_ratio - 0.01) <= 1e-6;
        }
        const auto t0 = Clock::now();
        const MonteCarloSummary mc = monte_carlo(cm, prior, tau, {100000, ++seed, 1});
        const double elapsed = seconds_since(t0);
        const double z = (mc.predictive_variance - r.predictive_variance) / mc.standard_error;
        ok = ok && std::abs(z) <= 3.0 && elapsed < 60.0;
        detail << "xi " << fmt(x) << ": rel err " << fmt(err) << ", ratio " << fmt(r.sql_ratio) << ", mc z "
               << fmt(z) << " in " << fmt(elapsed) << " s; ";
    }
    std::string d = detail.str();
    d.resize(d.size() - 2);
    return {ok, d};
}

Outcome contractive_coupling_limit() {
    const Grid g = Grid::standard();
    const TcsParams prior = make_tcs(1.0, 0.0, 0.4, 0.3);
    const ContractiveGLModel cm({std::sqrt(2.0), 0.0}, {0.0, 1.0});
    const TwoBodyState joint = contractive_interaction(as_wavefunction(prior), as_wavefunction(cm.base()), 1.0);
    double worst_density = 0.0, worst_overlap = 1.0;
    for (int k = 0; k < 10; ++k) {
        const double q = -2.0 + 0.45 * k;
        const double dens = joint.readout_density(q, g);
        worst_density = std::max(worst_density, std::abs(dens - std::norm(wavefunction_at(prior, q))));
        const GridState cond = joint.conditional_state(q, g);
        const double overlap = std::norm(inner_product(cond, gl_posterior(cm, g, q)));
        worst_overlap = std::min(worst_overlap, overlap);
    }
    return {worst_density <= 1e-9 && worst_overlap > 1.0 - 1e-9,
            "max density err " + fmt(worst_density) + ", min overlap 1 - " + fmt(1.0 - worst_overlap)};
}

Outcome dilation_round_trip() {
    std::mt19937_64 rng(424242);
    std::uniform_int_distribution<int> dim(2, 4), outs(2, 4), rank(1, 3);
    std::normal_distribution<double> gauss;
    double worst = 0.0;
    for (int i = 0; i < 100; ++i) {
        const FiniteOperationMeasure om = random_operation_measure(rng, dim(rng), outs(rng), rank(rng));
        const Realization r = dilate(om);
        worst = std::max(worst, unitarity_defect(r));
        Vector psi(om.dim());
        for (Eigen::Index j = 0; j < psi.size(); ++j) {
            psi(j) = cplx(gauss(rng), gauss(rng));
        }
        psi.normalize();
        const DensityOperator rho = DensityOperator::pure(psi);
        const RealizationStatistics st = realization_statistics(r, psi);
        for (std::size_t a = 0; a < om.size(); ++a) {
            worst = std::max(worst, std::abs(st.probabilities[a] - probability(om, a, rho)));
            if (st.posteriors[a]) {
                const Matrix diff = st.posteriors[a]->matrix() - posterior(om, a, rho).matrix();
                worst = std::max(worst, diff.cwiseAbs().maxCoeff());
            }
        }
    }
    double joint_err = 0.0;
    for (Eigen::Index d : {2, 3}) {
        const Realization r = dilate(von_neumann_discrete(d));
        Vector psi(d);
        for (Eigen::Index j = 0; j < d; ++j) {
            psi(j) = cplx(gauss(rng), gauss(rng));
        }
        psi.normalize();
        const Eigen::MatrixXd joint = joint_distribution(r, psi);
        for (Eigen::Index j = 0; j < d; ++j) {
            for (Eigen::Index a = 0; a < d; ++a) {
                joint_err = std::max(joint_err, std::abs(joint(j, a) - (j == a ? std::norm(psi(j)) : 0.0)));
            }
        }
    }
    return {worst <= 1e-10 && joint_err <= 1e-12,
            "max round-trip residual " + fmt(worst) + ", joint distribution err " + fmt(joint_err)};
}

Outcome choi_rejects_transpose() {
    bool ok = true;
    std::string detail;
    for (Eigen::Index d : {2, 3}) {
        const RawLinearMap t{d, {[](const Matrix &m) { return Matrix(m.transpose()); }}};
        const CpCertificate c = is_completely_positive(t);
        ok = ok && !c.completely_positive && c.min_eigenvalue <= -0.5 && c.witness.has_value();
        detail += "d=" + std::to_string(d) + " min eigenvalue " + fmt(c.min_eigenvalue) +
                  (c.witness ? " with witness" : " no witness") + (d == 2 ? "; " : "");
    }
    return {ok, detail};
}

Outcome repeatability() {
    std::vector<DensityOperator> tests;
    for (Eigen::Index i = 0; i < 3; ++i) {
        tests.push_back(DensityOperator::pure(Vector::Unit(3, i)));
    }
    tests.push_back(DensityOperator::pure(Vector::Ones(3)));
    const RepeatabilityReport vn = check_weak_repeatability(von_neumann_discrete(3), tests);
    std::ifstream in(std::string(QMEAS_SOURCE_DIR) + "/configs/smeared3.kraus");
    const RepeatabilityReport sm = check_weak_repeatability(read_measure(in), tests);
    return {vn.passed && !sm.passed && sm.max_violation > 1e-3,
            "von Neumann violation " + fmt(vn.max_violation) + ", smeared violation " + fmt(sm.max_violation)};
}

std::string capture(const std::string &command) {
    std::string out;
    FILE *pipe = popen(command.c_str(), "r");
    if (!pipe) {
        throw std::runtime_error("cannot run " + command);
    }
    char buf[4096];
    std::size_t got;
    while ((got = std::fread(buf, 1, sizeof buf, pipe)) > 0) {
        out.append(buf, got);
    }
    const int status = pclose(pipe);
    if (status != 0) {
        throw std::runtime_error("command failed: " + command);
    }
    return out;
}

Outcome reproducible_cli() {
    const std::string cmd =
        std::string("'") + QMEAS_CLI_PATH + "' repeat --config '" + QMEAS_SOURCE_DIR + "/configs/von_neumann.cfg'";
    const std::string a = capture(cmd);
    const std::string b = capture(cmd);
    const bool ok = !a.empty() && a == b && a.find("monte_carlo.rng") != std::string::npos;
    return {ok, std::to_string(a.size()) + " bytes, identical: " + (a == b ? "yes" : "no")};
}

}  // namespace

int main() {
    report(1, "contractive variance 1/6 at the contraction time on the standard grid", contraction_on_grid);
    report(2, "von Neumann precision = resolution = Delta Q", von_neumann_error_measures);
    report(3, "von Neumann measurements respect the standard quantum limit", von_neumann_respects_limit);
    report(4, "contractive measurements breach the limit, analytic and Monte Carlo", contractive_breach);
    report(5, "contractive coupling reproduces the exact measurement at K t = 1", contractive_coupling_limit);
    report(6, "dilations reproduce their operation measures", dilation_round_trip);
    report(7, "Choi test rejects the transpose map", choi_rejects_transpose);
    report(8, "weak repeatability separates von Neumann from smeared", repeatability);
    report(9, "repeat output is byte-identical across runs", reproducible_cli);
    std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criteria failed") << std::endl;
    return failures == 0 ? 0 : 1;
}
