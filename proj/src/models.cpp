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

#include "qmeas/models.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "qmeas/error.hpp"
#include "qmeas/spectral.hpp"

namespace qmeas {

namespace {

constexpr double kProbeNormTolerance = 1e-8;
constexpr double kCouplingTolerance = 1e-8;
constexpr double kCompletenessTolerance = 1e-6;
constexpr double kEscapeTolerance = 1e-8;

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

std::size_t require_zero_index(const Grid &grid, const char *what) {
    auto z = grid.zero_index();
    if (!z) {
        throw Error(ErrorKind::DomainError, std::string(what) + " grid must contain 0 as a sample point");
    }
    return *z;
}

// profile samples reordered so that index 0 holds the value at offset 0
std::vector<cplx> zero_first(const Grid &grid, std::span<const cplx> samples) {
    const std::size_t z = require_zero_index(grid, "effect profile");
    const std::size_t n = grid.n();
    std::vector<cplx> out(n);
    for (std::size_t m = 0; m < n; ++m) {
        out[m] = samples[(m + z) % n];
    }
    return out;
}

std::vector<double> density_of(std::span<const cplx> amps) {
    std::vector<double> out(amps.size());
    std::transform(amps.begin(), amps.end(), out.begin(), [](cplx a) { return std::norm(a); });
    return out;
}

double position_mean(const GridState &state) {
    const Grid &g = state.grid();
    auto amps = state.amplitudes();
    double total = 0.0, sx = 0.0;
    for (std::size_t i = 0; i < amps.size(); ++i) {
        double w = std::norm(amps[i]);
        total += w;
        sx += w * g.x(i);
    }
    return sx / total;
}

}  // namespace

// ---------------------------------------------------------------- models

VonNeumannModel::VonNeumannModel(GridState probe) : probe_(std::move(probe)), mirrored_(probe_) {
    const Grid &g = probe_.grid();
    const std::size_t z = require_zero_index(g, "probe");
    if (std::abs(probe_.norm() - 1.0) > kProbeNormTolerance) {
        throw Error(ErrorKind::NormalizationViolation, "probe wavefunction is not normalized");
    }
    const std::size_t n = g.n();
    auto amps = probe_.amplitudes();
    std::vector<cplx> mirror(n);
    for (std::size_t i = 0; i < n; ++i) {
        mirror[i] = amps[(2 * z + n - i) % n];
    }
    mirrored_ = GridState(g, std::move(mirror), probe_.mass(), probe_.hbar());
    Moments m = quadrature_moments(probe_);
    coupling_checked_ = std::abs(m.mean_x) < kCouplingTolerance && std::abs(m.mean_p) < kCouplingTolerance;
    probe_spread_ = std::sqrt(m.var_x);
}

std::vector<cplx> VonNeumannModel::response(double readout) const {
    GridState shifted = translated(mirrored_, readout);
    return {shifted.amplitudes().begin(), shifted.amplitudes().end()};
}

GordonLouisellModel::GordonLouisellModel(GridState posterior_shape, EffectFamily effect)
    : shape_(std::move(posterior_shape)), effect_(std::move(effect)) {
    if (std::abs(shape_.norm() - 1.0) > kProbeNormTolerance) {
        throw Error(ErrorKind::NormalizationViolation, "posterior shape is not normalized");
    }
    if (const auto *profile = std::get_if<EffectProfile>(&effect_)) {
        if (!(profile->grid == shape_.grid()) || profile->samples.size() != profile->grid.n()) {
            throw Error(ErrorKind::DomainError, "effect profile must share the posterior grid");
        }
        const double dx = profile->grid.dx();
        std::vector<cplx> spec = zero_first(profile->grid, profile->samples);
        spectral::forward(spec);
        for (auto &v : spec) {
            v = std::norm(v);
        }
        spectral::inverse(spec);
        double defect = 0.0;
        for (std::size_t m = 0; m < spec.size(); ++m) {
            double target = m == 0 ? 1.0 : 0.0;
            defect = std::max(defect, std::abs(dx * dx * spec[m] - target));
        }
        completeness_defect_ = defect;
    }
}

ContractiveGLModel::ContractiveGLModel(cplx mu, cplx nu, double omega, double mass, double hbar)
    : ContractiveGLModel(make_tcs(mu, nu, 0.0, 0.0, omega, mass, hbar)) {}

ContractiveGLModel::ContractiveGLModel(const TcsParams &params) : base_(params.recentered(0.0, 0.0)) {
    if (!(qmeas::xi(base_) > 0.0)) {
        throw Error(ErrorKind::NotContractive, "posterior family must have xi > 0");
    }
}

double ContractiveGLModel::xi() const { return qmeas::xi(base_); }

double ContractiveGLModel::contraction_time() const { return qmeas::contraction_time(base_); }

std::string model_name(const MeasurementModel &model) {
    return std::visit(overloaded{[](const VonNeumannModel &) { return std::string("von_neumann"); },
                                 [](const GordonLouisellModel &) { return std::string("gordon_louisell"); },
                                 [](const ContractiveGLModel &) { return std::string("contractive"); }},
                      model);
}

// ---------------------------------------------------------------- densities

double ReadoutDensity::integral() const {
    double s = 0.0;
    for (double v : values) {
        s += v;
    }
    return s * grid.dx();
}

double ReadoutDensity::mean() const {
    double s = 0.0, t = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) {
        s += values[i] * grid.x(i);
        t += values[i];
    }
    return s / t;
}

double ReadoutDensity::variance() const {
    const double mu = mean();
    double s = 0.0, t = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) {
        double d = grid.x(i) - mu;
        s += values[i] * d * d;
        t += values[i];
    }
    return s / t;
}

NoiseKernel NoiseKernel::exact() { return NoiseKernel(); }

NoiseKernel NoiseKernel::convolution(const Grid &grid, std::vector<double> profile) {
    require_zero_index(grid, "kernel");
    if (profile.size() != grid.n()) {
        throw Error(ErrorKind::DomainError, "kernel profile size does not match grid");
    }
    NoiseKernel k;
    k.profile_.emplace(grid, std::move(profile));
    return k;
}

double NoiseKernel::operator()(double a, double x) const {
    if (!profile_) {
        return std::abs(a - x) < 1e-12 ? 1.0 : 0.0;
    }
    const auto &[grid, g] = *profile_;
    double pos = (a - x - grid.x_min()) / grid.dx();
    double idx = std::round(pos);
    if (idx < 0.0 || idx >= static_cast<double>(grid.n())) {
        return 0.0;
    }
    return g[static_cast<std::size_t>(idx)];
}

double NoiseKernel::normalization() const {
    if (!profile_) {
        return 1.0;
    }
    const auto &[grid, g] = *profile_;
    double s = 0.0;
    for (double v : g) {
        s += v;
    }
    return s * grid.dx();
}

double NoiseKernel::bias() const {
    if (!profile_) {
        return 0.0;
    }
    const auto &[grid, g] = *profile_;
    double s = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) {
        s += grid.x(i) * g[i];
    }
    return s * grid.dx();
}

double NoiseKernel::second_moment() const {
    if (!profile_) {
        return 0.0;
    }
    const auto &[grid, g] = *profile_;
    double s = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) {
        s += grid.x(i) * grid.x(i) * g[i];
    }
    return s * grid.dx();
}

// ---------------------------------------------------------------- two-body states

Wavefunction as_wavefunction(const GridState &state) {
    auto interp = std::make_shared<SpectralInterpolant>(state);
    return [interp](double x) { return (*interp)(x); };
}

Wavefunction as_wavefunction(const TcsParams &params) {
    return [params](double x) { return wavefunction_at(params, x); };
}

double TwoBodyState::readout_density(double q, const Grid &object_grid) const {
    double s = 0.0;
    for (std::size_t i = 0; i < object_grid.n(); ++i) {
        s += std::norm(amplitude_(object_grid.x(i), q));
    }
    return s * object_grid.dx();
}

double TwoBodyState::object_density(double x, const Grid &probe_grid) const {
    double s = 0.0;
    for (std::size_t i = 0; i < probe_grid.n(); ++i) {
        s += std::norm(amplitude_(x, probe_grid.x(i)));
    }
    return s * probe_grid.dx();
}

GridState TwoBodyState::conditional_state(double q, const Grid &object_grid, double mass, double hbar) const {
    std::vector<cplx> amps(object_grid.n());
    for (std::size_t i = 0; i < object_grid.n(); ++i) {
        amps[i] = amplitude_(object_grid.x(i), q);
    }
    GridState raw(object_grid, std::move(amps), mass, hbar);
    if (!(raw.norm() > 1e-300)) {
        throw Error(ErrorKind::ZeroProbabilityReadout, "conditional state vanishes at this readout");
    }
    return raw.normalized();
}

TwoBodyState vn_joint_state(const VonNeumannModel &model, const GridState &psi) {
    Wavefunction object = as_wavefunction(psi);
    Wavefunction probe = as_wavefunction(model.probe());
    return TwoBodyState([object, probe](double x, double q) { return object(x) * probe(q - x); });
}

TwoBodyState contractive_interaction(Wavefunction psi, Wavefunction probe, double kt) {
    if (!(kt >= 0.0 && kt <= 1.0)) {
        throw Error(ErrorKind::DomainError, "coupling fraction K t must lie in [0, 1]");
    }
    const double c = 2.0 / std::sqrt(3.0);
    const double third = std::numbers::pi / 3.0;
    const double a11 = c * std::sin((1.0 - kt) * third);
    const double a12 = c * std::sin(kt * third);
    const double a22 = c * std::sin((1.0 + kt) * third);
    return TwoBodyState([=](double x, double q) {
        return psi(a11 * x + a12 * q) * probe(-a12 * x + a22 * q);
    });
}

TwoBodyState contractive_interaction(const GridState &psi, const GridState &probe, double kt) {
    return contractive_interaction(as_wavefunction(psi), as_wavefunction(probe), kt);
}

// ---------------------------------------------------------------- statistics

ReadoutDensity vn_probability(const VonNeumannModel &model, const GridState &psi) {
    const Grid &g = psi.grid();
    if (!(g == model.probe().grid())) {
        throw Error(ErrorKind::DomainError, "state and probe must share a grid");
    }
    const std::size_t n = g.n();
    const std::size_t z = *g.zero_index();
    const double dx = g.dx();

    // linear convolution of |psi|^2 with |Phi|^2 via a zero-padded transform
    std::vector<cplx> a(2 * n, 0.0), b(2 * n, 0.0);
    auto amps = psi.amplitudes();
    auto probe = model.probe().amplitudes();
    for (std::size_t i = 0; i < n; ++i) {
        a[i] = std::norm(amps[i]);
        // offset d = i - z lands at d mod 2n
        b[(i + 2 * n - z) % (2 * n)] = std::norm(probe[i]);
    }
    spectral::forward(a);
    spectral::forward(b);
    for (std::size_t i = 0; i < 2 * n; ++i) {
        a[i] *= b[i];
    }
    spectral::inverse(a);

    ReadoutDensity out{g, std::vector<double>(n)};
    for (std::size_t j = 0; j < n; ++j) {
        out.values[j] = std::max(0.0, a[j].real() * dx);
    }
    double escaped = psi.norm() - out.integral();
    if (escaped > kEscapeTolerance) {
        std::ostringstream msg;
        msg << "readout window loses " << escaped << " of the probability";
        throw Error(ErrorKind::GridTooNarrow, msg.str());
    }
    return out;
}

GridState vn_posterior(const VonNeumannModel &model, const GridState &psi, double q_bar) {
    std::vector<cplx> amps = model.response(q_bar);
    auto prior = psi.amplitudes();
    for (std::size_t i = 0; i < amps.size(); ++i) {
        amps[i] *= prior[i];
    }
    GridState raw(psi.grid(), std::move(amps), psi.mass(), psi.hbar());
    if (!(raw.norm() > 1e-300)) {
        throw Error(ErrorKind::ZeroProbabilityReadout, "readout " + std::to_string(q_bar) + " has zero probability");
    }
    return raw.normalized();
}

ReadoutDensity gl_probability(const GordonLouisellModel &model, const GridState &psi) {
    const Grid &g = psi.grid();
    if (model.completeness_defect() > kCompletenessTolerance) {
        std::ostringstream msg;
        msg << "effect family misses completeness by " << model.completeness_defect();
        throw Error(ErrorKind::CompletenessViolation, msg.str());
    }
    if (std::holds_alternative<ExactPositionEffect>(model.effect())) {
        return {g, psi.density()};
    }
    const auto &profile = std::get<EffectProfile>(model.effect());
    if (!(profile.grid == g)) {
        throw Error(ErrorKind::DomainError, "state and effect profile must share a grid");
    }
    // c_j = sum_i conj(profile(x_i - x_j)) psi_i, a circular correlation
    std::vector<cplx> phi = zero_first(g, profile.samples);
    std::vector<cplx> c(psi.amplitudes().begin(), psi.amplitudes().end());
    spectral::forward(phi);
    spectral::forward(c);
    for (std::size_t i = 0; i < c.size(); ++i) {
        c[i] *= std::conj(phi[i]);
    }
    spectral::inverse(c);
    const double dx = g.dx();
    ReadoutDensity out{g, std::vector<double>(c.size())};
    for (std::size_t j = 0; j < c.size(); ++j) {
        out.values[j] = std::norm(c[j] * dx);
    }
    return out;
}

ReadoutDensity gl_probability(const ContractiveGLModel &, const GridState &psi) {
    return {psi.grid(), psi.density()};
}

GridState gl_posterior(const GordonLouisellModel &model, double a) { return translated(model.posterior_shape(), a); }

GridState gl_posterior(const ContractiveGLModel &model, const Grid &grid, double a) {
    return discretize(model.base().recentered(a, 0.0), grid);
}

ReadoutDensity readout_density(const MeasurementModel &model, const GridState &psi) {
    return std::visit(overloaded{[&](const VonNeumannModel &m) { return vn_probability(m, psi); },
                                 [&](const GordonLouisellModel &m) { return gl_probability(m, psi); },
                                 [&](const ContractiveGLModel &m) { return gl_probability(m, psi); }},
                      model);
}

GridState posterior(const MeasurementModel &model, const GridState &psi, double a) {
    return std::visit(overloaded{[&](const VonNeumannModel &m) { return vn_posterior(m, psi, a); },
                                 [&](const GordonLouisellModel &m) { return gl_posterior(m, a); },
                                 [&](const ContractiveGLModel &m) { return gl_posterior(m, psi.grid(), a); }},
                      model);
}

NoiseKernel noise_kernel(const MeasurementModel &model) {
    return std::visit(
        overloaded{
            [](const VonNeumannModel &m) {
                return NoiseKernel::convolution(m.probe().grid(), density_of(m.probe().amplitudes()));
            },
            [](const GordonLouisellModel &m) {
                if (std::holds_alternative<ExactPositionEffect>(m.effect())) {
                    return NoiseKernel::exact();
                }
                const auto &profile = std::get<EffectProfile>(m.effect());
                std::size_t support = 0, where = 0;
                for (std::size_t i = 0; i < profile.samples.size(); ++i) {
                    if (std::abs(profile.samples[i]) > 0.0) {
                        ++support;
                        where = i;
                    }
                }
                if (support != 1) {
                    throw Error(ErrorKind::IncompatibleModel, "effects |Phi_a><Phi_a| are not diagonal in position");
                }
                if (where == *profile.grid.zero_index()) {
                    return NoiseKernel::exact();
                }
                // Phi_a peaks at x = a + d, so the readout sits at a = x - d
                const std::size_t n = profile.grid.n(), z = *profile.grid.zero_index();
                std::vector<double> g(n, 0.0);
                g[(2 * z + n - where) % n] = 1.0 / profile.grid.dx();
                return NoiseKernel::convolution(profile.grid, std::move(g));
            },
            [](const ContractiveGLModel &) { return NoiseKernel::exact(); }},
        model);
}

double precision(const MeasurementModel &model, const GridState &psi) {
    NoiseKernel kernel = noise_kernel(model);
    // epsilon(x)^2 is the same for every x, so the average is just that value
    return std::sqrt(kernel.second_moment() * psi.norm());
}

ResolutionBreakdown resolution_breakdown(const MeasurementModel &model, const GridState &psi) {
    ReadoutDensity p = readout_density(model, psi);
    const Grid &g = p.grid;
    const double floor = kReadoutFloor * *std::max_element(p.values.begin(), p.values.end());
    ResolutionBreakdown out;
    double mass = 0.0;
    for (std::size_t j = 0; j < g.n(); ++j) {
        const double w = p.values[j];
        if (w < floor || w <= 0.0) {
            ++out.excluded_readouts;
            continue;
        }
        const double a = g.x(j);
        GridState post = posterior(model, psi, a);
        auto amps = post.amplitudes();
        const Grid &pg = post.grid();
        double s2 = 0.0, mean = 0.0;
        for (std::size_t i = 0; i < amps.size(); ++i) {
            double d = std::norm(amps[i]);
            double x = pg.x(i);
            s2 += (a - x) * (a - x) * d;
            mean += x * d;
        }
        s2 *= pg.dx();
        mean *= pg.dx();
        double var = 0.0;
        for (std::size_t i = 0; i < amps.size(); ++i) {
            double x = pg.x(i) - mean;
            var += x * x * std::norm(amps[i]);
        }
        var *= pg.dx();
        mass += w;
        out.sigma_squared += w * s2;
        out.offset_squared += w * (a - mean) * (a - mean);
        out.posterior_variance += w * var;
    }
    out.sigma_squared /= mass;
    out.offset_squared /= mass;
    out.posterior_variance /= mass;
    return out;
}

double resolution(const MeasurementModel &model, const GridState &psi) {
    return std::sqrt(resolution_breakdown(model, psi).sigma_squared);
}

UnbiasednessReport check_unbiasedness(const MeasurementModel &model, const std::vector<GridState> &test_states,
                                      double tolerance) {
    UnbiasednessReport report;
    for (const auto &state : test_states) {
        double b = readout_density(model, state).mean() - position_mean(state);
        report.bias.push_back(b);
        report.max_deviation = std::max(report.max_deviation, std::abs(b));
    }
    report.passed = report.max_deviation <= tolerance;
    return report;
}

}  // namespace qmeas
