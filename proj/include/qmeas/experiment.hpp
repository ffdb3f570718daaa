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

// Repeated position measurements of a free mass.
//
// A first measurement yields readout a and posterior psi_a. The mass then
// evolves freely for tau and a second, identical measurement is made. The
// mean-value strategy predicts h(a) = <x> + <p> tau / m for the second
// readout, and the predictive uncertainty is the readout average of
// (second - h(a))^2. The analytic route integrates over the first readout on
// the grid; the Monte Carlo route simulates trials.
//
// Readouts are grid nodes in both routes. Monte Carlo draws node x_i with
// probability |psi(x_i)|^2 dx, which reproduces the quadrature moments the
// analytic route integrates.

#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "qmeas/grid.hpp"
#include "qmeas/models.hpp"

namespace qmeas {

// ---------------------------------------------------------------- config

struct ModelSpec {
    enum class Type { Contractive, VonNeumann };
    Type type = Type::Contractive;
    // contractive posterior family
    cplx mu{1.4142135623730951, 0.0};
    cplx nu{0.0, 1.0};
    double omega = 1.0;
    // von Neumann Gaussian probe, centred at Q = 0
    double probe_sigma = 0.5;
};

struct PriorSpec {
    enum class Type { Tcs, File };
    Type type = Type::Tcs;
    cplx mu{1.0, 0.0};
    cplx nu{0.0, 0.0};
    double x0 = 0.0;
    double p0 = 0.0;
    double omega = 1.0;
    /// state CSV, relative paths resolve against the config directory
    std::string file;
};

struct GridSpec {
    double x_min = -40.0;
    double x_max = 40.0;
    std::size_t n = 4096;
};

struct ExperimentConfig {
    double mass = 1.0;
    double hbar = 1.0;
    /// empty means the contraction time of a contractive model
    std::optional<double> tau;
    ModelSpec model;
    PriorSpec prior;
    GridSpec grid;
    /// 0 runs the analytic route only; otherwise at least 100
    std::size_t trials = 0;
    std::uint64_t seed = 1;
    /// 0 integrates over every grid readout; otherwise a power of two <= n
    std::size_t readout_bins = 0;
    unsigned threads = 1;
    std::string trial_log;
    std::string base_dir;
};

/// ConfigError with a line number for syntax and value problems.
ExperimentConfig parse_config(std::istream &in, const std::string &base_dir = ".");
ExperimentConfig load_config(const std::string &path);

/// Everything a run needs, built and cross-checked from a config.
struct ExperimentSetup {
    Grid grid;
    MeasurementModel model;
    GridState prior;
    double tau;
};

/// ConfigError when the prior file and the grid section disagree.
ExperimentSetup build_setup(const ExperimentConfig &config);

// ---------------------------------------------------------------- reports

struct TrialRecord {
    std::size_t trial = 0;
    double first_readout = 0.0;
    double prediction = 0.0;
    double second_readout = 0.0;
    double squared_error = 0.0;
};

struct MonteCarloSummary {
    std::size_t trials = 0;
    std::uint64_t seed = 0;
    double predictive_variance = 0.0;
    double standard_error = 0.0;
    /// trial average of the evolved posterior's position variance
    double posterior_variance_avg = 0.0;
    double precision_avg = 0.0;
    std::vector<TrialRecord> records;
};

struct ExperimentReport {
    std::string model;
    double mass = 1.0;
    double hbar = 1.0;
    double tau = 0.0;
    /// "direct" evolves each posterior on the grid; "moments" uses the
    /// Heisenberg-picture moments and makes the decomposition exact.
    std::string route;

    double predictive_variance = 0.0;
    double sql_bound = 0.0;
    double sql_ratio = 0.0;
    double precision_avg = 0.0;
    double posterior_variance_avg = 0.0;
    /// |predictive_variance - precision_avg - posterior_variance_avg|
    double decomposition_residual = 0.0;
    std::size_t readouts_used = 0;
    std::size_t excluded_readouts = 0;

    /// max deviation of predictive_variance across alternative priors
    std::optional<double> prior_independence_deviation;
    std::optional<MonteCarloSummary> monte_carlo;
};

enum class AnalyticRoute { Auto, Direct, Moments };

struct AnalyticOptions {
    std::size_t readout_bins = 0;
    /// Auto tries Direct and falls back to Moments when an evolved posterior
    /// leaves the grid.
    AnalyticRoute route = AnalyticRoute::Auto;
};

/// h(a) = <x> + <p> tau / m for a normalized posterior.
double predict(const GridState &posterior, double tau);

/// IncompatibleModel when the noise kernel is not translation invariant or
/// is biased.
ExperimentReport predictive_uncertainty_analytic(const MeasurementModel &model, const GridState &prior, double tau,
                                                 const AnalyticOptions &options = {});

struct MonteCarloOptions {
    std::size_t trials = 1000;
    std::uint64_t seed = 1;
    unsigned threads = 1;
};

MonteCarloSummary monte_carlo(const MeasurementModel &model, const GridState &prior, double tau,
                              const MonteCarloOptions &options);

/// Analytic report plus Monte Carlo (when trials > 0) and, for contractive
/// models, the prior-independence deviation.
ExperimentReport predictive_uncertainty_monte_carlo(const ExperimentConfig &config);
ExperimentReport run_experiment(const ExperimentConfig &config);

/// Largest spread of the analytic predictive variance over `priors`.
double prior_independence_deviation(const MeasurementModel &model, const std::vector<GridState> &priors, double tau,
                                    const AnalyticOptions &options = {});

struct CavesReport {
    /// [Delta x(psi_a)^2]
    double posterior_variance_avg = 0.0;
    /// [epsilon(U_tau psi_a)^2]
    double precision_avg = 0.0;
    /// posterior_variance_avg <= precision_avg
    bool sufficient_condition = false;
    /// [Delta x(tau)(psi_a)^2]
    double evolved_variance_avg = 0.0;
    /// min over readouts of Delta x(0) Delta x(tau) / (hbar tau / 2m)
    double min_uncertainty_product_ratio = 0.0;
    bool uncertainty_relation_holds = false;
    double predictive_variance = 0.0;
    double sql_bound = 0.0;
    bool sql_holds = false;
};

CavesReport caves_bound_check(const MeasurementModel &model, const GridState &prior, double tau,
                              const AnalyticOptions &options = {});

// ---------------------------------------------------------------- sweeps

struct SweepRow {
    double xi = 0.0;
    double tau = 0.0;
    double predictive_variance = 0.0;
    double sql_bound = 0.0;
    double sql_ratio = 0.0;
};

struct SweepOptions {
    double mass = 1.0;
    double hbar = 1.0;
    double omega = 1.0;
    Grid grid = Grid::standard();
    std::size_t readout_bins = 256;
};

/// Contractive model tcs_with_xi(xi) against a coherent prior at the origin,
/// for every (xi, tau). An empty `taus` means each model's contraction time.
std::vector<SweepRow> sweep(const std::vector<double> &xis, const std::vector<double> &taus,
                            const SweepOptions &options = {});

// ---------------------------------------------------------------- output

/// "key = value" lines, numbers with 12 significant digits.
void write_report(std::ostream &out, const ExperimentReport &report);
void write_trial_log(std::ostream &out, const std::vector<TrialRecord> &records);
void write_sweep_csv(std::ostream &out, const std::vector<SweepRow> &rows);

/// CSV with columns x, re, im.
void write_state_csv(std::ostream &out, const GridState &state);
/// ConfigError with the line number on malformed input or a non-uniform grid.
GridState read_state_csv(std::istream &in, double mass = 1.0, double hbar = 1.0);

/// Command-line entry point. Exit codes: 0 success, 2 configuration or
/// usage error, 3 numerical guard.
int run_cli(const std::vector<std::string> &args, std::ostream &out, std::ostream &err);

}  // namespace qmeas
