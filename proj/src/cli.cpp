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

#include <CLI11.hpp>
#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <random>
#include <sstream>

#include "qmeas/error.hpp"
#include "qmeas/experiment.hpp"
#include "qmeas/opmeasure.hpp"

namespace qmeas {

namespace {

constexpr double kPriorIndependenceTolerance = 1e-9;
constexpr double kRoundTripTolerance = 1e-10;

std::string fmt(double v) {
    std::ostringstream s;
    s << std::setprecision(12) << v;
    return s.str();
}

cplx parse_complex_arg(const std::string &text, const std::string &name) {
    std::string s = text;
    std::replace(s.begin(), s.end(), ',', ' ');
    std::istringstream in(s);
    double re = 0.0, im = 0.0;
    std::string rest;
    if (!(in >> re)) {
        throw Error(ErrorKind::ConfigError, name + ": expected 're,im', got '" + text + "'");
    }
    if (!(in >> im)) {
        im = 0.0;
    } else if (in >> rest) {
        throw Error(ErrorKind::ConfigError, name + ": expected 're,im', got '" + text + "'");
    }
    return {re, im};
}

struct GridArgs {
    std::optional<double> x_min;
    std::optional<double> x_max;
    std::optional<std::size_t> n;

    void add_to(CLI::App *app) {
        app->add_option("--x-min", x_min, "grid lower edge");
        app->add_option("--x-max", x_max, "grid upper edge (periodic image of x-min)");
        app->add_option("--n", n, "grid size, a power of two >= 16");
    }

    bool any() const { return x_min || x_max || n; }

    Grid build(const Grid &fallback) const {
        try {
            return Grid(x_min.value_or(fallback.x_min()), x_max.value_or(fallback.x_max()), n.value_or(fallback.n()));
        } catch (const Error &e) {
            throw Error(ErrorKind::ConfigError, e.what());
        }
    }
};

// ------------------------------------------------------------ tcs

struct TcsArgs {
    std::string mu = "1,0";
    std::string nu = "0,0";
    double omega = 1.0, mass = 1.0, hbar = 1.0, x0 = 0.0, p0 = 0.0;
    std::optional<double> t_max;
    std::size_t steps = 20;
    GridArgs grid;
};

int run_tcs(const TcsArgs &a, std::ostream &out) {
    const TcsParams params =
        make_tcs(parse_complex_arg(a.mu, "--mu"), parse_complex_arg(a.nu, "--nu"), a.x0, a.p0, a.omega, a.mass, a.hbar);
    const double x = xi(params);
    const Moments m = moments(params);
    const double t_max = a.t_max.value_or(x > 0.0 ? 2.0 * contraction_time(params) : 2.0);
    if (!(t_max >= 0.0) || a.steps == 0) {
        throw Error(ErrorKind::ConfigError, "--t-max must be nonnegative and --steps positive");
    }
    const Grid grid = a.grid.any() ? a.grid.build(auto_grid(params, t_max)) : auto_grid(params, t_max);
    const GridState state = discretize(params, grid);

    out << "# xi = " << fmt(x) << '\n';
    out << "# mean_x = " << fmt(m.mean_x) << '\n';
    out << "# mean_p = " << fmt(m.mean_p) << '\n';
    out << "# var_x = " << fmt(m.var_x) << '\n';
    out << "# var_p = " << fmt(m.var_p) << '\n';
    out << "# correlation = " << fmt(m.correlation) << '\n';
    out << "# mean_energy = " << fmt(m.mean_energy) << '\n';
    if (x > 0.0) {
        out << "# contraction_time = " << fmt(contraction_time(params)) << '\n';
        out << "# min_position_uncertainty = " << fmt(min_position_uncertainty(params)) << '\n';
    }
    out << "# grid = " << fmt(grid.x_min()) << ',' << fmt(grid.x_max()) << ',' << grid.n() << '\n';
    out << "t,variance_closed_form,variance_grid\n";
    for (std::size_t k = 0; k <= a.steps; ++k) {
        const double t = t_max * static_cast<double>(k) / static_cast<double>(a.steps);
        const GridState evolved = free_evolve(state, t);
        out << fmt(t) << ',' << fmt(position_variance_at(params, t)) << ','
            << fmt(quadrature_moments(evolved).var_x) << '\n';
    }
    return 0;
}

// ------------------------------------------------------------ repeat

struct RepeatArgs {
    std::string config;
    std::optional<std::size_t> trials;
    std::optional<std::uint64_t> seed;
    std::optional<unsigned> threads;
    std::optional<std::size_t> readout_bins;
    std::optional<std::string> trial_log;
    std::optional<std::string> report;
};

int run_repeat(const RepeatArgs &a, std::ostream &out, std::ostream &err) {
    ExperimentConfig cfg = load_config(a.config);
    if (a.trials) {
        if (*a.trials != 0 && *a.trials < 100) {
            throw Error(ErrorKind::ConfigError, "--trials must be 0 or at least 100");
        }
        cfg.trials = *a.trials;
    }
    if (a.seed) {
        cfg.seed = *a.seed;
    }
    if (a.threads) {
        cfg.threads = std::max(1u, *a.threads);
    }
    if (a.readout_bins) {
        cfg.readout_bins = *a.readout_bins;
    }
    if (a.trial_log) {
        cfg.trial_log = *a.trial_log;
    }
    const ExperimentReport report = run_experiment(cfg);

    if (a.report) {
        std::ofstream f(*a.report);
        if (!f) {
            throw Error(ErrorKind::ConfigError, "cannot write report '" + *a.report + "'");
        }
        write_report(f, report);
    } else {
        write_report(out, report);
    }
    if (!cfg.trial_log.empty() && report.monte_carlo) {
        std::ofstream f(cfg.trial_log);
        if (!f) {
            throw Error(ErrorKind::ConfigError, "cannot write trial log '" + cfg.trial_log + "'");
        }
        write_trial_log(f, report.monte_carlo->records);
    }
    if (report.prior_independence_deviation && *report.prior_independence_deviation > kPriorIndependenceTolerance) {
        err << "error: predictive variance depends on the prior by " << fmt(*report.prior_independence_deviation)
            << '\n';
        return 3;
    }
    return 0;
}

// ------------------------------------------------------------ sweep

struct SweepArgs {
    std::vector<double> xi;
    std::vector<double> tau;
    bool at_contraction_time = false;
    double mass = 1.0, hbar = 1.0, omega = 1.0;
    std::size_t readout_bins = 256;
    GridArgs grid;
};

int run_sweep(const SweepArgs &a, std::ostream &out) {
    if (a.at_contraction_time && !a.tau.empty()) {
        throw Error(ErrorKind::ConfigError, "--tau and --at-contraction-time are exclusive");
    }
    for (double x : a.xi) {
        if (!(x > 0.0)) {
            throw Error(ErrorKind::ConfigError, "--xi values must be positive for a contractive model");
        }
    }
    for (double t : a.tau) {
        if (!(t > 0.0)) {
            throw Error(ErrorKind::ConfigError, "--tau values must be positive");
        }
    }
    if (!(a.mass > 0.0) || !(a.hbar > 0.0) || !(a.omega > 0.0)) {
        throw Error(ErrorKind::ConfigError, "--mass, --hbar and --omega must be positive");
    }
    SweepOptions options;
    options.mass = a.mass;
    options.hbar = a.hbar;
    options.omega = a.omega;
    options.grid = a.grid.build(Grid::standard());
    options.readout_bins = a.readout_bins;
    write_sweep_csv(out, sweep(a.xi, a.tau, options));
    return 0;
}

// ------------------------------------------------------------ dilate-demo

struct DilateArgs {
    std::string measure;
    bool print_unitary = false;
};

int run_dilate(const DilateArgs &a, std::ostream &out, std::ostream &err) {
    std::ifstream in(a.measure);
    if (!in) {
        throw Error(ErrorKind::ConfigError, "cannot open measure file '" + a.measure + "'");
    }
    const FiniteOperationMeasure om = read_measure(in);
    const Realization r = dilate(om);
    const Eigen::Index d = om.dim();

    std::vector<Vector> states;
    for (Eigen::Index i = 0; i < d; ++i) {
        states.push_back(Vector::Unit(d, i));
    }
    states.push_back(Vector::Ones(d) / std::sqrt(static_cast<double>(d)));
    std::mt19937_64 rng(20260101);
    std::normal_distribution<double> gauss;
    Vector v(d);
    for (Eigen::Index i = 0; i < d; ++i) {
        v(i) = cplx(gauss(rng), gauss(rng));
    }
    states.push_back(v.normalized());

    double prob_residual = 0.0, post_residual = 0.0;
    for (const auto &psi : states) {
        const DensityOperator rho = DensityOperator::pure(psi);
        const RealizationStatistics stats = realization_statistics(r, psi);
        for (std::size_t o = 0; o < om.size(); ++o) {
            const double p = probability(om, o, rho);
            prob_residual = std::max(prob_residual, std::abs(p - stats.probabilities[o]));
            if (p > 1e-12 && stats.posteriors[o]) {
                const Matrix diff = posterior(om, o, rho).matrix() - stats.posteriors[o]->matrix();
                post_residual = std::max(post_residual, diff.cwiseAbs().maxCoeff());
            }
        }
    }
    const double defect = unitarity_defect(r);
    const CpCertificate cp = is_completely_positive(om);

    out << "# dilation of " << std::filesystem::path(a.measure).filename().string() << '\n';
    out << "system_dim = " << d << '\n';
    out << "outcomes = " << om.size() << '\n';
    out << "probe_dim = " << r.probe_dim << '\n';
    out << "completely_positive = " << (cp.completely_positive ? "true" : "false") << '\n';
    out << "min_choi_eigenvalue = " << fmt(cp.min_eigenvalue) << '\n';
    out << "unitarity_defect = " << fmt(defect) << '\n';
    out << "probability_residual = " << fmt(prob_residual) << '\n';
    out << "posterior_residual = " << fmt(post_residual) << '\n';
    if (a.print_unitary) {
        out << "# unitary\n";
        write_matrix(out, r.unitary);
    }
    if (defect > kRoundTripTolerance || prob_residual > kRoundTripTolerance || post_residual > kRoundTripTolerance) {
        err << "error: dilation round trip exceeds " << kRoundTripTolerance << '\n';
        return 3;
    }
    return 0;
}

}  // namespace

int run_cli(const std::vector<std::string> &args, std::ostream &out, std::ostream &err) {
    CLI::App app{"Repeated position measurements of a free mass and finite operation measures", "qmeas"};
    app.require_subcommand(1);

    TcsArgs tcs_args;
    auto *tcs = app.add_subcommand("tcs", "moments and variance curve of a twisted coherent state (CSV)");
    tcs->add_option("--mu", tcs_args.mu, "mu as re,im")->capture_default_str();
    tcs->add_option("--nu", tcs_args.nu, "nu as re,im")->capture_default_str();
    tcs->add_option("--omega", tcs_args.omega)->capture_default_str();
    tcs->add_option("--mass", tcs_args.mass)->capture_default_str();
    tcs->add_option("--hbar", tcs_args.hbar)->capture_default_str();
    tcs->add_option("--x0", tcs_args.x0)->capture_default_str();
    tcs->add_option("--p0", tcs_args.p0)->capture_default_str();
    tcs->add_option("--t-max", tcs_args.t_max, "end of the curve (default: twice the contraction time, or 2)");
    tcs->add_option("--steps", tcs_args.steps, "number of intervals")->capture_default_str();
    tcs_args.grid.add_to(tcs);

    RepeatArgs repeat_args;
    auto *repeat = app.add_subcommand("repeat", "run an experiment config and print its report");
    repeat->add_option("--config", repeat_args.config, "experiment config file")->required();
    repeat->add_option("--trials", repeat_args.trials, "override run.trials (0 = analytic only)");
    repeat->add_option("--seed", repeat_args.seed, "override run.seed");
    repeat->add_option("--threads", repeat_args.threads, "override run.threads");
    repeat->add_option("--readout-bins", repeat_args.readout_bins, "override run.readout_bins");
    repeat->add_option("--trial-log", repeat_args.trial_log, "write the Monte Carlo trial log CSV here");
    repeat->add_option("--report", repeat_args.report, "write the report here instead of stdout");

    SweepArgs sweep_args;
    auto *sweep_cmd = app.add_subcommand("sweep", "sql_ratio table of contractive measurements over xi and tau");
    sweep_cmd->add_option("--xi", sweep_args.xi, "comma-separated xi values")->required()->delimiter(',');
    sweep_cmd->add_option("--tau", sweep_args.tau, "comma-separated tau values")->delimiter(',');
    sweep_cmd->add_flag("--at-contraction-time", sweep_args.at_contraction_time,
                        "use each model's contraction time (default without --tau)");
    sweep_cmd->add_option("--mass", sweep_args.mass)->capture_default_str();
    sweep_cmd->add_option("--hbar", sweep_args.hbar)->capture_default_str();
    sweep_cmd->add_option("--omega", sweep_args.omega)->capture_default_str();
    sweep_cmd->add_option("--readout-bins", sweep_args.readout_bins)->capture_default_str();
    sweep_args.grid.add_to(sweep_cmd);

    DilateArgs dilate_args;
    auto *dilate_cmd = app.add_subcommand("dilate-demo", "dilate a Kraus measure file and check the round trip");
    dilate_cmd->add_option("--measure", dilate_args.measure, "measure file")->required();
    dilate_cmd->add_flag("--print-unitary", dilate_args.print_unitary, "also print the coupling unitary");

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(std::move(reversed));
    } catch (const CLI::ParseError &e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? 0 : 2;
    }

    try {
        if (*tcs) {
            return run_tcs(tcs_args, out);
        }
        if (*repeat) {
            return run_repeat(repeat_args, out, err);
        }
        if (*sweep_cmd) {
            return run_sweep(sweep_args, out);
        }
        return run_dilate(dilate_args, out, err);
    } catch (const Error &e) {
        err << "error: " << e.what() << '\n';
        return is_numerical_guard(e.kind()) ? 3 : 2;
    } catch (const std::exception &e) {
        err << "error: " << e.what() << '\n';
        return 2;
    }
}

}  // namespace qmeas
