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

#include "qmeas/grid.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numbers>
#include <sstream>

#include "qmeas/error.hpp"
#include "qmeas/spectral.hpp"

namespace qmeas {

namespace {

constexpr double kDiscretizeBoundaryLimit = 1e-10;

std::vector<cplx> spectrum_of(std::span<const cplx> amplitudes) {
    std::vector<cplx> out(amplitudes.begin(), amplitudes.end());
    spectral::forward(out);
    return out;
}

}  // namespace

Grid::Grid(double x_min, double x_max, std::size_t n) : x_min_(x_min), x_max_(x_max), n_(n) {
    if (!(x_max > x_min) || !std::isfinite(x_min) || !std::isfinite(x_max)) {
        throw Error(ErrorKind::DomainError, "grid requires finite x_max > x_min");
    }
    if (n < 16 || !std::has_single_bit(n)) {
        throw Error(ErrorKind::DomainError, "grid size must be a power of two >= 16, got " + std::to_string(n));
    }
}

Grid Grid::standard() { return Grid(-40.0, 40.0, 4096); }

double Grid::wavenumber(std::size_t i) const {
    const double dk = 2.0 * std::numbers::pi / (x_max_ - x_min_);
    auto signed_index = static_cast<std::ptrdiff_t>(i);
    if (i >= n_ / 2) {
        signed_index -= static_cast<std::ptrdiff_t>(n_);
    }
    return dk * static_cast<double>(signed_index);
}

double Grid::k_max() const { return std::numbers::pi / dx(); }

std::optional<std::size_t> Grid::zero_index() const {
    double pos = -x_min_ / dx();
    double rounded = std::round(pos);
    if (std::abs(pos - rounded) > 1e-9 || rounded < 0.0 || rounded >= static_cast<double>(n_)) {
        return std::nullopt;
    }
    return static_cast<std::size_t>(rounded);
}

Grid auto_grid(const TcsParams &params, double t_max) {
    Moments m = moments(params);
    double sd_x = std::sqrt(std::max(m.var_x, position_variance_at(params, std::max(t_max, 0.0))));
    double drift = std::abs(params.p0()) / params.mass() * std::max(t_max, 0.0);
    double half_width = std::abs(params.x0()) + drift + 12.0 * sd_x;
    double k_needed = (std::abs(params.p0()) + 10.0 * std::sqrt(m.var_p)) / params.hbar();
    double dx_target = 0.8 * std::numbers::pi / k_needed;
    auto n = std::bit_ceil(static_cast<std::size_t>(std::ceil(2.0 * half_width / dx_target)));
    n = std::max<std::size_t>(n, 16);
    return Grid(-half_width, half_width, n);
}

GridState::GridState(Grid grid, std::vector<cplx> amplitudes, double mass, double hbar)
    : grid_(grid), amplitudes_(std::move(amplitudes)), mass_(mass), hbar_(hbar) {
    if (amplitudes_.size() != grid_.n()) {
        throw Error(ErrorKind::DomainError, "amplitude count does not match grid size");
    }
    if (!(mass > 0.0) || !(hbar > 0.0)) {
        throw Error(ErrorKind::DomainError, "mass and hbar must be positive");
    }
}

double GridState::norm() const {
    double s = 0.0;
    for (const auto &a : amplitudes_) {
        s += std::norm(a);
    }
    return s * grid_.dx();
}

GridState GridState::normalized() const {
    double nrm = norm();
    if (!(nrm > 0.0) || !std::isfinite(nrm)) {
        throw Error(ErrorKind::ZeroProbabilityReadout, "cannot normalize a null state");
    }
    std::vector<cplx> out = amplitudes_;
    const double scale = 1.0 / std::sqrt(nrm);
    for (auto &a : out) {
        a *= scale;
    }
    return GridState(grid_, std::move(out), mass_, hbar_);
}

std::vector<double> GridState::density() const {
    std::vector<double> out(amplitudes_.size());
    std::transform(amplitudes_.begin(), amplitudes_.end(), out.begin(), [](cplx a) { return std::norm(a); });
    return out;
}

double band_edge_fraction(const Grid &grid, std::span<const cplx> spectrum) {
    double total = 0.0, edge = 0.0;
    const double cutoff = 0.9 * grid.k_max();
    for (std::size_t i = 0; i < spectrum.size(); ++i) {
        double w = std::norm(spectrum[i]);
        total += w;
        if (std::abs(grid.wavenumber(i)) > cutoff) {
            edge += w;
        }
    }
    return total > 0.0 ? edge / total : 0.0;
}

double boundary_mass(const GridState &state) {
    const std::size_t n = state.grid().n();
    const std::size_t edge = std::max<std::size_t>(1, n / 100);
    auto amps = state.amplitudes();
    double s = 0.0;
    for (std::size_t i = 0; i < edge; ++i) {
        s += std::norm(amps[i]) + std::norm(amps[n - 1 - i]);
    }
    return s * state.grid().dx();
}

GridState discretize(const TcsParams &params, const Grid &grid) {
    std::vector<cplx> amps(grid.n());
    for (std::size_t i = 0; i < grid.n(); ++i) {
        amps[i] = wavefunction_at(params, grid.x(i));
    }
    GridState state = GridState(grid, std::move(amps), params.mass(), params.hbar()).normalized();
    double edge = boundary_mass(state);
    if (edge > kDiscretizeBoundaryLimit) {
        std::ostringstream msg;
        msg << "edge probability " << edge << " on [" << grid.x_min() << ", " << grid.x_max() << ")";
        throw Error(ErrorKind::GridTooNarrow, msg.str());
    }
    return state;
}

GridState gaussian_state(const Grid &grid, double center, double sigma, double p0, double mass, double hbar) {
    if (!(sigma > 0.0)) {
        throw Error(ErrorKind::DomainError, "gaussian width must be positive");
    }
    std::vector<cplx> amps(grid.n());
    for (std::size_t i = 0; i < grid.n(); ++i) {
        double d = grid.x(i) - center;
        amps[i] = std::polar(std::exp(-d * d / (4.0 * sigma * sigma)), p0 * d / hbar);
    }
    GridState state = GridState(grid, std::move(amps), mass, hbar).normalized();
    if (boundary_mass(state) > kDiscretizeBoundaryLimit) {
        throw Error(ErrorKind::GridTooNarrow, "gaussian does not fit on the grid");
    }
    return state;
}

Moments quadrature_moments(const GridState &state) {
    const Grid &g = state.grid();
    const double hbar = state.hbar();
    auto amps = state.amplitudes();
    const std::size_t n = g.n();

    double total = 0.0, sx = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double w = std::norm(amps[i]);
        double x = g.x(i);
        total += w;
        sx += w * x;
        sxx += w * x * x;
    }
    Moments m;
    m.mean_x = sx / total;
    m.var_x = std::max(0.0, sxx / total - m.mean_x * m.mean_x);

    std::vector<cplx> spec = spectrum_of(amps);
    double ptotal = 0.0, sp = 0.0, spp = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double w = std::norm(spec[i]);
        double p = hbar * g.wavenumber(i);
        ptotal += w;
        sp += w * p;
        spp += w * p * p;
    }
    m.mean_p = sp / ptotal;
    m.var_p = std::max(0.0, spp / ptotal - m.mean_p * m.mean_p);

    // p psi by spectral differentiation, then 2 Re <psi| x p |psi> - 2 <x><p>
    for (std::size_t i = 0; i < n; ++i) {
        spec[i] *= hbar * g.wavenumber(i);
    }
    spectral::inverse(spec);
    cplx xp = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        xp += std::conj(amps[i]) * g.x(i) * spec[i];
    }
    m.correlation = 2.0 * xp.real() / total - 2.0 * m.mean_x * m.mean_p;
    m.mean_energy = (m.mean_p * m.mean_p + m.var_p) / (2.0 * state.mass());
    return m;
}

cplx inner_product(const GridState &a, const GridState &b) {
    if (!(a.grid() == b.grid())) {
        throw Error(ErrorKind::DomainError, "inner product of states on different grids");
    }
    cplx s = 0.0;
    auto x = a.amplitudes();
    auto y = b.amplitudes();
    for (std::size_t i = 0; i < x.size(); ++i) {
        s += std::conj(x[i]) * y[i];
    }
    return s * a.grid().dx();
}

FreePropagator::FreePropagator(const Grid &grid, double t, double mass, double hbar)
    : grid_(grid), t_(t), phases_(grid.n()) {
    if (!(t >= 0.0)) {
        throw Error(ErrorKind::DomainError, "evolution time must be nonnegative");
    }
    for (std::size_t i = 0; i < grid.n(); ++i) {
        double k = grid.wavenumber(i);
        phases_[i] = std::polar(1.0, -hbar * k * k * t / (2.0 * mass));
    }
}

void FreePropagator::apply_spectrum(std::span<cplx> spectrum) const {
    for (std::size_t i = 0; i < spectrum.size(); ++i) {
        spectrum[i] *= phases_[i];
    }
}

GridState FreePropagator::operator()(const GridState &state) const {
    if (t_ == 0.0) {
        return state;
    }
    std::vector<cplx> spec = spectrum_of(state.amplitudes());
    double band = band_edge_fraction(state.grid(), spec);
    if (band > kAliasingLimit) {
        throw Error(ErrorKind::AliasingRisk, "momentum band edge holds " + std::to_string(band));
    }
    apply_spectrum(spec);
    spectral::inverse(spec);
    GridState out(state.grid(), std::move(spec), state.mass(), state.hbar());
    double edge = boundary_mass(out);
    if (edge > kAliasingLimit) {
        throw Error(ErrorKind::AliasingRisk, "evolved packet reaches the window edge (" + std::to_string(edge) + ")");
    }
    return out;
}

GridState free_evolve(const GridState &state, double t) {
    return FreePropagator(state.grid(), t, state.mass(), state.hbar())(state);
}

GridState translated(const GridState &state, double shift) {
    const Grid &g = state.grid();
    const std::size_t n = g.n();
    double steps = shift / g.dx();
    double rounded = std::round(steps);
    std::vector<cplx> out(n);
    auto amps = state.amplitudes();
    if (std::abs(steps - rounded) < 1e-9) {
        auto offset = static_cast<long long>(rounded);
        const auto nn = static_cast<long long>(n);
        for (long long i = 0; i < nn; ++i) {
            long long src = ((i - offset) % nn + nn) % nn;
            out[static_cast<std::size_t>(i)] = amps[static_cast<std::size_t>(src)];
        }
    } else {
        out.assign(amps.begin(), amps.end());
        spectral::forward(out);
        for (std::size_t i = 0; i < n; ++i) {
            out[i] *= std::polar(1.0, -g.wavenumber(i) * shift);
        }
        spectral::inverse(out);
    }
    return GridState(g, std::move(out), state.mass(), state.hbar());
}

SpectralInterpolant::SpectralInterpolant(const GridState &state)
    : grid_(state.grid()),
      values_(state.amplitudes().begin(), state.amplitudes().end()),
      spectrum_(spectrum_of(state.amplitudes())) {}

cplx SpectralInterpolant::operator()(double x) const {
    const double pos = (x - grid_.x_min()) / grid_.dx();
    const double nearest = std::round(pos);
    const auto n = static_cast<double>(grid_.n());
    if (std::abs(pos - nearest) < 1e-9) {
        double wrapped = std::fmod(std::fmod(nearest, n) + n, n);
        return values_[static_cast<std::size_t>(wrapped)];
    }
    cplx s = 0.0;
    const double rel = x - grid_.x_min();
    for (std::size_t i = 0; i < spectrum_.size(); ++i) {
        s += spectrum_[i] * std::polar(1.0, grid_.wavenumber(i) * rel);
    }
    return s / n;
}

PositionSampler::PositionSampler(const GridState &state, SamplingRule rule)
    : PositionSampler(state.grid(), state.density(), rule) {}

PositionSampler::PositionSampler(const Grid &grid, std::span<const double> density, SamplingRule rule)
    : grid_(grid), rule_(rule) {
    if (density.size() != grid.n()) {
        throw Error(ErrorKind::DomainError, "density size does not match grid");
    }
    if (rule_ == SamplingRule::Nodes) {
        // cdf_[i + 1] - cdf_[i] is the weight of node i
        cdf_.assign(grid.n() + 1, 0.0);
        for (std::size_t i = 0; i < grid.n(); ++i) {
            cdf_[i + 1] = cdf_[i] + density[i];
        }
    } else {
        cdf_.assign(grid.n(), 0.0);
        const double half_dx = 0.5 * grid.dx();
        for (std::size_t i = 1; i < cdf_.size(); ++i) {
            cdf_[i] = cdf_[i - 1] + (density[i - 1] + density[i]) * half_dx;
        }
    }
    if (!(cdf_.back() > 0.0)) {
        throw Error(ErrorKind::ZeroProbabilityReadout, "cannot sample from a null density");
    }
}

double PositionSampler::operator()(double uniform_draw) const {
    const double target = std::clamp(uniform_draw, 0.0, 1.0) * cdf_.back();
    // first node whose cumulative mass exceeds the target closes the cell
    auto it = std::upper_bound(cdf_.begin() + 1, cdf_.end(), target);
    if (it == cdf_.end()) {
        return grid_.x(grid_.n() - 1);
    }
    const auto hi = static_cast<std::size_t>(it - cdf_.begin());
    const std::size_t lo = hi - 1;
    if (rule_ == SamplingRule::Nodes) {
        return grid_.x(lo);
    }
    const double frac = (target - cdf_[lo]) / (cdf_[hi] - cdf_[lo]);
    return grid_.x(lo) + frac * grid_.dx();
}

double sample_position(const GridState &state, double uniform_draw) {
    return PositionSampler(state)(uniform_draw);
}

}  // namespace qmeas
