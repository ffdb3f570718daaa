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

#include "qmeas/experiment.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <thread>

#include "qmeas/error.hpp"
#include "qmeas/rng.hpp"
#include "qmeas/spectral.hpp"

namespace qmeas {

namespace {

constexpr double kBiasTolerance = 1e-7;
constexpr double kPriorNormTolerance = 1e-6;
constexpr std::size_t kMinTrials = 100;

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

// ------------------------------------------------------------ text helpers

[[noreturn]] void config_error(int line, const std::string &what) {
    throw Error(ErrorKind::ConfigError, "line " + std::to_string(line) + ": " + what);
}

std::string trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string_view::npos) {
        return {};
    }
    const auto last = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(first, last - first + 1));
}

std::optional<double> to_real(std::string_view raw) {
    const std::string trimmed = trim(raw);
    std::string_view text = trimmed;
    if (!text.empty() && text.front() == '+') {
        text.remove_prefix(1);
    }
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc() || ptr != text.data() + text.size() || text.empty() || !std::isfinite(v)) {
        return std::nullopt;
    }
    return v;
}

double parse_real(const std::string &value, int line, const std::string &key) {
    auto v = to_real(value);
    if (!v) {
        config_error(line, key + ": expected a number, got '" + value + "'");
    }
    return *v;
}

double parse_positive(const std::string &value, int line, const std::string &key) {
    double v = parse_real(value, line, key);
    if (!(v > 0.0)) {
        config_error(line, key + " must be positive");
    }
    return v;
}

cplx parse_complex(const std::string &value, int line, const std::string &key) {
    const auto comma = value.find(',');
    if (comma == std::string::npos) {
        return {parse_real(value, line, key), 0.0};
    }
    auto re = to_real(std::string_view(value).substr(0, comma));
    auto im = to_real(std::string_view(value).substr(comma + 1));
    if (!re || !im) {
        config_error(line, key + ": expected 're,im', got '" + value + "'");
    }
    return {*re, *im};
}

std::uint64_t parse_unsigned(const std::string &value, int line, const std::string &key) {
    std::uint64_t v = 0;
    auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
    if (ec != std::errc() || ptr != value.data() + value.size() || value.empty()) {
        config_error(line, key + ": expected a nonnegative integer, got '" + value + "'");
    }
    return v;
}

std::string fmt(double v) {
    std::ostringstream s;
    s << std::setprecision(12) << v;
    return s.str();
}

// ------------------------------------------------------------ model helpers

NoiseKernel checked_kernel(const MeasurementModel &model) {
    NoiseKernel kernel = noise_kernel(model);
    if (std::abs(kernel.bias()) > kBiasTolerance) {
        throw Error(ErrorKind::IncompatibleModel, "measurement is biased by " + fmt(kernel.bias()));
    }
    return kernel;
}

std::size_t readout_stride(const Grid &grid, std::size_t bins) {
    if (bins == 0) {
        return 1;
    }
    if (!std::has_single_bit(bins) || bins > grid.n()) {
        throw Error(ErrorKind::DomainError, "readout_bins must be a power of two no larger than the grid");
    }
    return grid.n() / bins;
}

// weighted mean and variance of a grid density
std::pair<double, double> density_moments(const Grid &grid, std::span<const double> density) {
    double total = 0.0, sx = 0.0;
    for (std::size_t i = 0; i < density.size(); ++i) {
        total += density[i];
        sx += density[i] * grid.x(i);
    }
    const double mean = sx / total;
    double var = 0.0;
    for (std::size_t i = 0; i < density.size(); ++i) {
        const double d = grid.x(i) - mean;
        var += density[i] * d * d;
    }
    return {mean, var / total};
}

struct ReadoutTerms {
    double weight = 0.0;
    double var0 = 0.0;
    double var_tau = 0.0;
    double delta2 = 0.0;
};

struct ReadoutScan {
    std::vector<ReadoutTerms> terms;
    std::size_t excluded = 0;
    double precision_squared = 0.0;
};

ReadoutScan scan_readouts(const MeasurementModel &model, const GridState &prior, double tau, std::size_t bins,
                          AnalyticRoute route) {
    if (!(tau >= 0.0)) {
        throw Error(ErrorKind::DomainError, "tau must be nonnegative");
    }
    ReadoutScan scan;
    scan.precision_squared = checked_kernel(model).second_moment();
    const ReadoutDensity p = readout_density(model, prior);
    const Grid &g = p.grid;
    const std::size_t stride = readout_stride(g, bins);
    const double peak = *std::max_element(p.values.begin(), p.values.end());
    const double floor = kReadoutFloor * peak;
    const double t_over_m = tau / prior.mass();
    std::optional<FreePropagator> propagator;
    if (route == AnalyticRoute::Direct) {
        propagator.emplace(g, tau, prior.mass(), prior.hbar());
    }

    for (std::size_t j = 0; j < g.n(); j += stride) {
        const double w = p.values[j];
        if (w < floor || !(w > 0.0)) {
            ++scan.excluded;
            continue;
        }
        const double a = g.x(j);
        const GridState post = posterior(model, prior, a);
        const Moments m = quadrature_moments(post);
        ReadoutTerms t;
        t.weight = w;
        t.var0 = m.var_x;
        const double h = m.mean_x + m.mean_p * t_over_m;
        if (route == AnalyticRoute::Direct) {
            const GridState evolved = (*propagator)(post);
            t.var_tau = density_moments(g, evolved.density()).second;
            const ReadoutDensity second = readout_density(model, evolved);
            double total = 0.0, s = 0.0;
            for (std::size_t i = 0; i < g.n(); ++i) {
                const double d = g.x(i) - h;
                total += second.values[i];
                s += second.values[i] * d * d;
            }
            t.delta2 = s / total;
        } else {
            t.var_tau = m.var_x + t_over_m * m.correlation + t_over_m * t_over_m * m.var_p;
            t.delta2 = scan.precision_squared + t.var_tau;
        }
        scan.terms.push_back(t);
    }
    if (scan.terms.empty()) {
        throw Error(ErrorKind::ZeroProbabilityReadout, "no readout carries probability");
    }
    return scan;
}

ExperimentReport summarize(const MeasurementModel &model, const GridState &prior, double tau, const ReadoutScan &scan,
                           AnalyticRoute route) {
    ExperimentReport r;
    r.model = model_name(model);
    r.mass = prior.mass();
    r.hbar = prior.hbar();
    r.tau = tau;
    r.route = route == AnalyticRoute::Direct ? "direct" : "moments";
    double mass = 0.0, delta2 = 0.0, var_tau = 0.0;
    for (const auto &t : scan.terms) {
        mass += t.weight;
        delta2 += t.weight * t.delta2;
        var_tau += t.weight * t.var_tau;
    }
    r.predictive_variance = delta2 / mass;
    r.posterior_variance_avg = var_tau / mass;
    r.precision_avg = scan.precision_squared;
    r.decomposition_residual = std::abs(r.predictive_variance - r.precision_avg - r.posterior_variance_avg);
    r.sql_bound = sql_bound(r.mass, tau, r.hbar);
    r.sql_ratio = r.predictive_variance / r.sql_bound;
    r.readouts_used = scan.terms.size();
    r.excluded_readouts = scan.excluded;
    return r;
}

// ------------------------------------------------------------ Monte Carlo

class TrialEngine {
   public:
    TrialEngine(const MeasurementModel &model, const GridState &prior, double tau)
        : model_(model),
          prior_(prior),
          grid_(prior.grid()),
          tau_(tau),
          propagator_(prior.grid(), tau, prior.mass(), prior.hbar()) {
        std::visit(overloaded{[&](const VonNeumannModel &m) {
                                  first_.emplace(prior_, SamplingRule::Nodes);
                                  probe_.emplace(m.probe(), SamplingRule::Nodes);
                                  probe_origin_ = m.probe().grid().x(*m.probe().grid().zero_index());
                              },
                              [&](const GordonLouisellModel &m) {
                                  const ReadoutDensity p = gl_probability(m, prior_);
                                  first_.emplace(p.grid, p.values, SamplingRule::Nodes);
                              },
                              [&](const ContractiveGLModel &m) {
                                  first_.emplace(prior_, SamplingRule::Nodes);
                                  if (grid_.zero_index()) {
                                      base_.emplace(gl_posterior(m, grid_, 0.0));
                                  }
                              }},
                   model_);
    }

    struct Outcome {
        TrialRecord record;
        double evolved_variance = 0.0;
    };

    Outcome run(std::uint64_t seed, std::size_t trial, std::vector<cplx> &work) const {
        const CounterRng rng(seed, trial);
        Outcome out;
        out.record.trial = trial;
        double a = (*first_)(rng.uniform(0));
        if (probe_) {
            a += (*probe_)(rng.uniform(1)) - probe_origin_;
        }
        out.record.first_readout = a;
        const GridState post = make_posterior(a);

        auto amps = post.amplitudes();
        work.assign(amps.begin(), amps.end());
        double total = 0.0, sx = 0.0;
        for (std::size_t i = 0; i < work.size(); ++i) {
            const double w = std::norm(work[i]);
            total += w;
            sx += w * grid_.x(i);
        }
        spectral::forward(work);
        double ptotal = 0.0, sp = 0.0;
        for (std::size_t i = 0; i < work.size(); ++i) {
            const double w = std::norm(work[i]);
            ptotal += w;
            sp += w * grid_.wavenumber(i);
        }
        if (band_edge_fraction(grid_, work) > kAliasingLimit) {
            throw Error(ErrorKind::AliasingRisk, "posterior momentum reaches the band edge");
        }
        const double mean_p = prior_.hbar() * sp / ptotal;
        out.record.prediction = sx / total + mean_p * tau_ / prior_.mass();

        propagator_.apply_spectrum(work);
        spectral::inverse(work);
        GridState evolved(grid_, std::move(work), prior_.mass(), prior_.hbar());
        if (boundary_mass(evolved) > kAliasingLimit) {
            throw Error(ErrorKind::AliasingRisk, "evolved posterior reaches the window edge");
        }
        const std::vector<double> density = evolved.density();
        out.evolved_variance = density_moments(grid_, density).second;

        double second = 0.0;
        if (const auto *gl = std::get_if<GordonLouisellModel>(&model_)) {
            const ReadoutDensity p = gl_probability(*gl, evolved);
            second = PositionSampler(p.grid, p.values, SamplingRule::Nodes)(rng.uniform(2));
        } else {
            second = PositionSampler(grid_, density, SamplingRule::Nodes)(rng.uniform(2));
            if (probe_) {
                second += (*probe_)(rng.uniform(3)) - probe_origin_;
            }
        }
        out.record.second_readout = second;
        const double err = second - out.record.prediction;
        out.record.squared_error = err * err;
        // hand the buffer back for reuse by the next trial
        auto back = evolved.amplitudes();
        work.assign(back.begin(), back.end());
        return out;
    }

   private:
    GridState make_posterior(double a) const {
        if (base_) {
            // node readouts give whole-sample shifts of the centred posterior
            GridState shifted = translated(*base_, a);
            if (boundary_mass(shifted) > 1e-10) {
                throw Error(ErrorKind::GridTooNarrow, "posterior for readout " + fmt(a) + " does not fit the grid");
            }
            return shifted;
        }
        return posterior(model_, prior_, a);
    }

    const MeasurementModel &model_;
    const GridState &prior_;
    Grid grid_;
    double tau_;
    FreePropagator propagator_;
    std::optional<PositionSampler> first_;
    std::optional<PositionSampler> probe_;
    double probe_origin_ = 0.0;
    std::optional<GridState> base_;
};

std::string resolve_path(const std::string &base_dir, const std::string &file) {
    std::filesystem::path p(file);
    if (p.is_relative() && !base_dir.empty()) {
        p = std::filesystem::path(base_dir) / p;
    }
    return p.string();
}

std::vector<GridState> alternative_priors(const GridState &prior) {
    const Moments m = quadrature_moments(prior);
    const double sd = std::sqrt(m.var_x);
    std::vector<GridState> out{prior};
    out.push_back(gaussian_state(prior.grid(), m.mean_x - 0.5 * sd, 0.5 * sd, prior.hbar() / sd, prior.mass(),
                                 prior.hbar()));
    out.push_back(gaussian_state(prior.grid(), m.mean_x + 0.5 * sd, sd / 3.0, 0.0, prior.mass(), prior.hbar()));
    return out;
}

}  // namespace

// ---------------------------------------------------------------- config

ExperimentConfig parse_config(std::istream &in, const std::string &base_dir) {
    ExperimentConfig cfg;
    cfg.base_dir = base_dir;
    std::map<std::string, int> seen;
    std::string section;
    std::string raw;
    int line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        const auto hash = raw.find_first_of("#;");
        std::string line = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
        if (line.empty()) {
            continue;
        }
        if (line.front() == '[') {
            if (line.back() != ']') {
                config_error(line_no, "unterminated section header");
            }
            section = trim(std::string_view(line).substr(1, line.size() - 2));
            if (section != "system" && section != "model" && section != "prior" && section != "grid" &&
                section != "run") {
                config_error(line_no, "unknown section [" + section + "]");
            }
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            config_error(line_no, "expected 'key = value'");
        }
        if (section.empty()) {
            config_error(line_no, "key outside of a section");
        }
        const std::string key = trim(std::string_view(line).substr(0, eq));
        const std::string value = trim(std::string_view(line).substr(eq + 1));
        const std::string full = section + "." + key;
        if (value.empty()) {
            config_error(line_no, full + " has no value");
        }
        if (!seen.emplace(full, line_no).second) {
            config_error(line_no, full + " is set twice");
        }

        if (section == "system") {
            if (key == "mass") {
                cfg.mass = parse_positive(value, line_no, full);
            } else if (key == "hbar") {
                cfg.hbar = parse_positive(value, line_no, full);
            } else if (key == "tau") {
                if (value == "contraction_time") {
                    cfg.tau.reset();
                } else {
                    cfg.tau = parse_positive(value, line_no, full);
                }
            } else {
                config_error(line_no, "unknown key " + full);
            }
        } else if (section == "model") {
            if (key == "type") {
                if (value == "contractive") {
                    cfg.model.type = ModelSpec::Type::Contractive;
                } else if (value == "von_neumann") {
                    cfg.model.type = ModelSpec::Type::VonNeumann;
                } else {
                    config_error(line_no, "model.type must be contractive or von_neumann");
                }
            } else if (key == "mu") {
                cfg.model.mu = parse_complex(value, line_no, full);
            } else if (key == "nu") {
                cfg.model.nu = parse_complex(value, line_no, full);
            } else if (key == "omega") {
                cfg.model.omega = parse_positive(value, line_no, full);
            } else if (key == "probe_sigma") {
                cfg.model.probe_sigma = parse_positive(value, line_no, full);
            } else {
                config_error(line_no, "unknown key " + full);
            }
        } else if (section == "prior") {
            if (key == "type") {
                if (value == "tcs") {
                    cfg.prior.type = PriorSpec::Type::Tcs;
                } else if (value == "file") {
                    cfg.prior.type = PriorSpec::Type::File;
                } else {
                    config_error(line_no, "prior.type must be tcs or file");
                }
            } else if (key == "mu") {
                cfg.prior.mu = parse_complex(value, line_no, full);
            } else if (key == "nu") {
                cfg.prior.nu = parse_complex(value, line_no, full);
            } else if (key == "x0") {
                cfg.prior.x0 = parse_real(value, line_no, full);
            } else if (key == "p0") {
                cfg.prior.p0 = parse_real(value, line_no, full);
            } else if (key == "omega") {
                cfg.prior.omega = parse_positive(value, line_no, full);
            } else if (key == "file") {
                cfg.prior.file = value;
            } else {
                config_error(line_no, "unknown key " + full);
            }
        } else if (section == "grid") {
            if (key == "x_min") {
                cfg.grid.x_min = parse_real(value, line_no, full);
            } else if (key == "x_max") {
                cfg.grid.x_max = parse_real(value, line_no, full);
            } else if (key == "n") {
                cfg.grid.n = parse_unsigned(value, line_no, full);
                if (cfg.grid.n < 16 || !std::has_single_bit(cfg.grid.n)) {
                    config_error(line_no, "grid.n must be a power of two >= 16");
                }
            } else {
                config_error(line_no, "unknown key " + full);
            }
        } else {
            if (key == "trials") {
                cfg.trials = parse_unsigned(value, line_no, full);
                if (cfg.trials != 0 && cfg.trials < kMinTrials) {
                    config_error(line_no, "run.trials must be 0 or at least 100");
                }
            } else if (key == "seed") {
                cfg.seed = parse_unsigned(value, line_no, full);
            } else if (key == "readout_bins") {
                cfg.readout_bins = parse_unsigned(value, line_no, full);
                if (cfg.readout_bins != 0 && !std::has_single_bit(cfg.readout_bins)) {
                    config_error(line_no, "run.readout_bins must be 0 or a power of two");
                }
            } else if (key == "threads") {
                auto t = parse_unsigned(value, line_no, full);
                if (t < 1 || t > 256) {
                    config_error(line_no, "run.threads must be between 1 and 256");
                }
                cfg.threads = static_cast<unsigned>(t);
            } else if (key == "trial_log") {
                cfg.trial_log = value;
            } else {
                config_error(line_no, "unknown key " + full);
            }
        }
    }

    auto line_of = [&](const std::string &key) {
        auto it = seen.find(key);
        return it == seen.end() ? line_no : it->second;
    };
    if (!(cfg.grid.x_max > cfg.grid.x_min)) {
        config_error(line_of("grid.x_max"), "grid.x_max must exceed grid.x_min");
    }
    if (cfg.readout_bins > cfg.grid.n) {
        config_error(line_of("run.readout_bins"), "run.readout_bins exceeds grid.n");
    }
    if (cfg.prior.type == PriorSpec::Type::File && cfg.prior.file.empty()) {
        config_error(line_of("prior.type"), "prior.type = file needs prior.file");
    }
    if (!cfg.tau && cfg.model.type != ModelSpec::Type::Contractive) {
        config_error(line_of("system.tau"), "system.tau = contraction_time needs a contractive model");
    }
    if (cfg.model.type == ModelSpec::Type::Contractive) {
        const double constraint = std::norm(cfg.model.mu) - std::norm(cfg.model.nu);
        if (std::abs(constraint - 1.0) > 1e-9) {
            config_error(line_of("model.mu"), "model needs |mu|^2 - |nu|^2 = 1, got " + fmt(constraint));
        }
        if (!((std::conj(cfg.model.mu) * cfg.model.nu).imag() > 0.0)) {
            config_error(line_of("model.nu"), "contractive model needs Im(conj(mu) nu) > 0");
        }
    }
    if (cfg.prior.type == PriorSpec::Type::Tcs) {
        const double constraint = std::norm(cfg.prior.mu) - std::norm(cfg.prior.nu);
        if (std::abs(constraint - 1.0) > 1e-9) {
            config_error(line_of("prior.mu"), "prior needs |mu|^2 - |nu|^2 = 1, got " + fmt(constraint));
        }
    }
    return cfg;
}

ExperimentConfig load_config(const std::string &path) {
    std::ifstream in(path);
    if (!in) {
        throw Error(ErrorKind::ConfigError, "cannot open config file '" + path + "'");
    }
    const auto parent = std::filesystem::path(path).parent_path().string();
    return parse_config(in, parent.empty() ? "." : parent);
}

ExperimentSetup build_setup(const ExperimentConfig &c) {
    std::optional<Grid> grid;
    try {
        grid.emplace(c.grid.x_min, c.grid.x_max, c.grid.n);
    } catch (const Error &e) {
        throw Error(ErrorKind::ConfigError, e.what());
    }

    std::optional<GridState> prior;
    if (c.prior.type == PriorSpec::Type::Tcs) {
        prior.emplace(discretize(make_tcs(c.prior.mu, c.prior.nu, c.prior.x0, c.prior.p0, c.prior.omega, c.mass,
                                          c.hbar),
                                 *grid));
    } else {
        const std::string path = resolve_path(c.base_dir, c.prior.file);
        std::ifstream in(path);
        if (!in) {
            throw Error(ErrorKind::ConfigError, "cannot open prior file '" + path + "'");
        }
        GridState loaded = read_state_csv(in, c.mass, c.hbar);
        const Grid &lg = loaded.grid();
        const double tol = 1e-9 * grid->dx();
        if (lg.n() != grid->n() || std::abs(lg.x_min() - grid->x_min()) > tol ||
            std::abs(lg.x_max() - grid->x_max()) > tol) {
            throw Error(ErrorKind::ConfigError, "prior file grid does not match the [grid] section");
        }
        GridState on_grid(*grid, {loaded.amplitudes().begin(), loaded.amplitudes().end()}, c.mass, c.hbar);
        if (std::abs(on_grid.norm() - 1.0) > kPriorNormTolerance) {
            throw Error(ErrorKind::NormalizationViolation, "prior file state has norm " + fmt(on_grid.norm()));
        }
        prior.emplace(on_grid.normalized());
    }

    std::optional<MeasurementModel> model;
    if (c.model.type == ModelSpec::Type::Contractive) {
        model.emplace(ContractiveGLModel(c.model.mu, c.model.nu, c.model.omega, c.mass, c.hbar));
    } else {
        if (!grid->zero_index()) {
            throw Error(ErrorKind::ConfigError, "von_neumann model needs a grid with a sample at x = 0");
        }
        model.emplace(VonNeumannModel(gaussian_state(*grid, 0.0, c.model.probe_sigma, 0.0, c.mass, c.hbar)));
    }

    double tau = 0.0;
    if (c.tau) {
        tau = *c.tau;
    } else {
        tau = std::get<ContractiveGLModel>(*model).contraction_time();
    }
    return ExperimentSetup{*grid, std::move(*model), std::move(*prior), tau};
}

// ---------------------------------------------------------------- analytic

double predict(const GridState &posterior, double tau) {
    const Moments m = quadrature_moments(posterior);
    return m.mean_x + m.mean_p * tau / posterior.mass();
}

ExperimentReport predictive_uncertainty_analytic(const MeasurementModel &model, const GridState &prior, double tau,
                                                 const AnalyticOptions &options) {
    if (options.route != AnalyticRoute::Moments) {
        try {
            auto scan = scan_readouts(model, prior, tau, options.readout_bins, AnalyticRoute::Direct);
            return summarize(model, prior, tau, scan, AnalyticRoute::Direct);
        } catch (const Error &e) {
            const bool escaped = e.kind() == ErrorKind::AliasingRisk || e.kind() == ErrorKind::GridTooNarrow;
            if (options.route == AnalyticRoute::Direct || !escaped) {
                throw;
            }
        }
    }
    auto scan = scan_readouts(model, prior, tau, options.readout_bins, AnalyticRoute::Moments);
    return summarize(model, prior, tau, scan, AnalyticRoute::Moments);
}

double prior_independence_deviation(const MeasurementModel &model, const std::vector<GridState> &priors, double tau,
                                    const AnalyticOptions &options) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    for (const auto &p : priors) {
        const double v = predictive_uncertainty_analytic(model, p, tau, options).predictive_variance;
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    return priors.empty() ? 0.0 : hi - lo;
}

CavesReport caves_bound_check(const MeasurementModel &model, const GridState &prior, double tau,
                              const AnalyticOptions &options) {
    const auto scan = scan_readouts(model, prior, tau, options.readout_bins, AnalyticRoute::Moments);
    const double half_bound = 0.5 * sql_bound(prior.mass(), tau, prior.hbar());
    CavesReport r;
    double mass = 0.0, var0 = 0.0, var_tau = 0.0;
    r.min_uncertainty_product_ratio = std::numeric_limits<double>::infinity();
    for (const auto &t : scan.terms) {
        mass += t.weight;
        var0 += t.weight * t.var0;
        var_tau += t.weight * t.var_tau;
        r.min_uncertainty_product_ratio =
            std::min(r.min_uncertainty_product_ratio, std::sqrt(t.var0 * t.var_tau) / half_bound);
    }
    r.posterior_variance_avg = var0 / mass;
    r.evolved_variance_avg = var_tau / mass;
    r.precision_avg = scan.precision_squared;
    r.sufficient_condition = r.posterior_variance_avg <= r.precision_avg * (1.0 + 1e-12);
    r.uncertainty_relation_holds = r.min_uncertainty_product_ratio >= 1.0 - 1e-9;
    r.predictive_variance = r.precision_avg + r.evolved_variance_avg;
    r.sql_bound = 2.0 * half_bound;
    r.sql_holds = r.predictive_variance >= r.sql_bound * (1.0 - 1e-9);
    return r;
}

// ---------------------------------------------------------------- Monte Carlo

MonteCarloSummary monte_carlo(const MeasurementModel &model, const GridState &prior, double tau,
                              const MonteCarloOptions &options) {
    if (options.trials < kMinTrials) {
        throw Error(ErrorKind::ConfigError, "Monte Carlo needs at least 100 trials");
    }
    if (!(tau >= 0.0)) {
        throw Error(ErrorKind::DomainError, "tau must be nonnegative");
    }
    const NoiseKernel kernel = checked_kernel(model);
    const TrialEngine engine(model, prior, tau);

    std::vector<TrialRecord> records(options.trials);
    std::vector<double> evolved_var(options.trials);
    const unsigned workers = std::max(1u, std::min<unsigned>(options.threads, 256));
    std::vector<std::exception_ptr> failures(workers);
    auto work = [&](unsigned w) {
        try {
            std::vector<cplx> buffer;
            for (std::size_t t = w; t < options.trials; t += workers) {
                auto o = engine.run(options.seed, t, buffer);
                records[t] = o.record;
                evolved_var[t] = o.evolved_variance;
            }
        } catch (...) {
            failures[w] = std::current_exception();
        }
    };
    if (workers == 1) {
        work(0);
    } else {
        std::vector<std::thread> pool;
        for (unsigned w = 0; w < workers; ++w) {
            pool.emplace_back(work, w);
        }
        for (auto &th : pool) {
            th.join();
        }
    }
    for (const auto &f : failures) {
        if (f) {
            std::rethrow_exception(f);
        }
    }

    MonteCarloSummary s;
    s.trials = options.trials;
    s.seed = options.seed;
    s.precision_avg = kernel.second_moment();
    const double n = static_cast<double>(options.trials);
    double sum = 0.0, sum_var = 0.0;
    for (std::size_t t = 0; t < options.trials; ++t) {
        sum += records[t].squared_error;
        sum_var += evolved_var[t];
    }
    s.predictive_variance = sum / n;
    s.posterior_variance_avg = sum_var / n;
    double ss = 0.0;
    for (const auto &r : records) {
        const double d = r.squared_error - s.predictive_variance;
        ss += d * d;
    }
    s.standard_error = std::sqrt(ss / (n - 1.0) / n);
    s.records = std::move(records);
    return s;
}

ExperimentReport run_experiment(const ExperimentConfig &config) {
    const ExperimentSetup setup = build_setup(config);
    AnalyticOptions options;
    options.readout_bins = config.readout_bins;
    ExperimentReport report = predictive_uncertainty_analytic(setup.model, setup.prior, setup.tau, options);
    if (std::holds_alternative<ContractiveGLModel>(setup.model)) {
        report.prior_independence_deviation =
            prior_independence_deviation(setup.model, alternative_priors(setup.prior), setup.tau, options);
    }
    if (config.trials > 0) {
        report.monte_carlo = monte_carlo(setup.model, setup.prior, setup.tau,
                                         MonteCarloOptions{config.trials, config.seed, config.threads});
    }
    return report;
}

ExperimentReport predictive_uncertainty_monte_carlo(const ExperimentConfig &config) {
    if (config.trials < kMinTrials) {
        throw Error(ErrorKind::ConfigError, "Monte Carlo needs at least 100 trials");
    }
    return run_experiment(config);
}

// ---------------------------------------------------------------- sweeps

std::vector<SweepRow> sweep(const std::vector<double> &xis, const std::vector<double> &taus,
                            const SweepOptions &options) {
    std::vector<SweepRow> rows;
    const GridState prior =
        discretize(make_tcs(1.0, 0.0, 0.0, 0.0, options.omega, options.mass, options.hbar), options.grid);
    AnalyticOptions analytic;
    analytic.readout_bins = options.readout_bins;
    for (double x : xis) {
        const ContractiveGLModel model(tcs_with_xi(x, 0.0, 0.0, options.omega, options.mass, options.hbar));
        std::vector<double> times = taus.empty() ? std::vector<double>{model.contraction_time()} : taus;
        for (double tau : times) {
            const ExperimentReport r = predictive_uncertainty_analytic(model, prior, tau, analytic);
            rows.push_back({model.xi(), tau, r.predictive_variance, r.sql_bound, r.sql_ratio});
        }
    }
    return rows;
}

// ---------------------------------------------------------------- output

void write_report(std::ostream &out, const ExperimentReport &r) {
    auto kv = [&](const std::string &key, const std::string &value) { out << key << " = " << value << '\n'; };
    out << "# qmeas experiment report\n";
    kv("model", r.model);
    kv("mass", fmt(r.mass));
    kv("hbar", fmt(r.hbar));
    kv("tau", fmt(r.tau));
    kv("route", r.route);
    kv("readouts_used", std::to_string(r.readouts_used));
    kv("excluded_readouts", std::to_string(r.excluded_readouts));
    kv("predictive_variance", fmt(r.predictive_variance));
    kv("sql_bound", fmt(r.sql_bound));
    kv("sql_ratio", fmt(r.sql_ratio));
    kv("precision_avg", fmt(r.precision_avg));
    kv("posterior_variance_avg", fmt(r.posterior_variance_avg));
    kv("decomposition_residual", fmt(r.decomposition_residual));
    if (r.prior_independence_deviation) {
        kv("prior_independence_deviation", fmt(*r.prior_independence_deviation));
    }
    if (r.monte_carlo) {
        const auto &mc = *r.monte_carlo;
        kv("monte_carlo.rng", std::string(kRngName));
        kv("monte_carlo.seed", std::to_string(mc.seed));
        kv("monte_carlo.trials", std::to_string(mc.trials));
        kv("monte_carlo.predictive_variance", fmt(mc.predictive_variance));
        kv("monte_carlo.standard_error", fmt(mc.standard_error));
        kv("monte_carlo.sql_ratio", fmt(mc.predictive_variance / r.sql_bound));
        kv("monte_carlo.precision_avg", fmt(mc.precision_avg));
        kv("monte_carlo.posterior_variance_avg", fmt(mc.posterior_variance_avg));
        const double z = mc.standard_error > 0.0 ? (mc.predictive_variance - r.predictive_variance) / mc.standard_error
                                                 : 0.0;
        kv("monte_carlo.z_score", fmt(z));
    }
}

void write_trial_log(std::ostream &out, const std::vector<TrialRecord> &records) {
    out << "trial,first_readout,prediction,second_readout,squared_error\n";
    for (const auto &r : records) {
        out << r.trial << ',' << fmt(r.first_readout) << ',' << fmt(r.prediction) << ',' << fmt(r.second_readout)
            << ',' << fmt(r.squared_error) << '\n';
    }
}

void write_sweep_csv(std::ostream &out, const std::vector<SweepRow> &rows) {
    out << "xi,tau,predictive_variance,sql_bound,sql_ratio\n";
    for (const auto &r : rows) {
        out << fmt(r.xi) << ',' << fmt(r.tau) << ',' << fmt(r.predictive_variance) << ',' << fmt(r.sql_bound) << ','
            << fmt(r.sql_ratio) << '\n';
    }
}

void write_state_csv(std::ostream &out, const GridState &state) {
    std::ostringstream s;
    s << std::setprecision(17);
    s << "x,re,im\n";
    auto amps = state.amplitudes();
    for (std::size_t i = 0; i < amps.size(); ++i) {
        s << state.grid().x(i) << ',' << amps[i].real() << ',' << amps[i].imag() << '\n';
    }
    out << s.str();
}

GridState read_state_csv(std::istream &in, double mass, double hbar) {
    std::vector<double> xs;
    std::vector<cplx> amps;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string t = trim(line);
        if (t.empty() || t.front() == '#') {
            continue;
        }
        if (xs.empty() && amps.empty() && !to_real(t.substr(0, t.find(',')))) {
            continue;  // header row
        }
        std::vector<double> cells;
        std::size_t start = 0;
        while (true) {
            const auto comma = t.find(',', start);
            auto v = to_real(std::string_view(t).substr(start, comma == std::string::npos ? std::string::npos
                                                                                        : comma - start));
            if (!v) {
                config_error(line_no, "expected three numbers 'x,re,im'");
            }
            cells.push_back(*v);
            if (comma == std::string::npos) {
                break;
            }
            start = comma + 1;
        }
        if (cells.size() != 3) {
            config_error(line_no, "expected three numbers 'x,re,im'");
        }
        xs.push_back(cells[0]);
        amps.emplace_back(cells[1], cells[2]);
    }
    const std::size_t n = xs.size();
    if (n < 16 || !std::has_single_bit(n)) {
        throw Error(ErrorKind::ConfigError, "state file needs a power-of-two number of rows >= 16");
    }
    const double dx = (xs.back() - xs.front()) / static_cast<double>(n - 1);
    if (!(dx > 0.0)) {
        throw Error(ErrorKind::ConfigError, "state file x column must increase");
    }
    for (std::size_t i = 0; i < n; ++i) {
        if (std::abs(xs[i] - (xs.front() + static_cast<double>(i) * dx)) > 1e-9 * std::max(1.0, dx)) {
            throw Error(ErrorKind::ConfigError, "state file x column is not uniformly spaced");
        }
    }
    return GridState(Grid(xs.front(), xs.front() + static_cast<double>(n) * dx, n), std::move(amps), mass, hbar);
}

}  // namespace qmeas
