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

// Wavefunctions sampled on a uniform periodic position grid.
//
// Sample i sits at x_min + i*dx with dx = (x_max - x_min)/n, so x_max itself
// is the periodic image of x_min. Momentum-space quantities use the
// discrete Fourier transform in standard wavenumber ordering; integrals in
// position use the trapezoid rule, which on a periodic grid is the plain
// sum times dx.

#pragma once

#include <complex>
#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "qmeas/tcs.hpp"

namespace qmeas {

class Grid {
   public:
    /// Throws DomainError unless x_max > x_min and n is a power of two >= 16.
    Grid(double x_min, double x_max, std::size_t n);

    /// [-40, 40] with 4096 samples.
    static Grid standard();

    double x_min() const { return x_min_; }
    double x_max() const { return x_max_; }
    std::size_t n() const { return n_; }
    double dx() const { return (x_max_ - x_min_) / static_cast<double>(n_); }
    double x(std::size_t i) const { return x_min_ + static_cast<double>(i) * dx(); }
    double wavenumber(std::size_t i) const;
    double k_max() const;

    /// Index of the sample at x = 0 when the grid contains it exactly.
    std::optional<std::size_t> zero_index() const;

    bool operator==(const Grid &other) const = default;

   private:
    double x_min_;
    double x_max_;
    std::size_t n_;
};

/// Symmetric grid wide enough for `params` in position (including free
/// spreading up to `t_max`) and in momentum.
Grid auto_grid(const TcsParams &params, double t_max = 0.0);

class GridState {
   public:
    GridState(Grid grid, std::vector<cplx> amplitudes, double mass = 1.0, double hbar = 1.0);

    const Grid &grid() const { return grid_; }
    std::span<const cplx> amplitudes() const { return amplitudes_; }
    double mass() const { return mass_; }
    double hbar() const { return hbar_; }

    /// sum |psi|^2 dx
    double norm() const;
    /// Copy scaled to unit norm; ZeroProbabilityReadout for a null state.
    GridState normalized() const;
    std::vector<double> density() const;

   private:
    Grid grid_;
    std::vector<cplx> amplitudes_;
    double mass_;
    double hbar_;
};

/// Samples the twisted coherent state on `grid` and normalizes.
/// GridTooNarrow if more than 1e-10 of the probability sits at the edges.
GridState discretize(const TcsParams &params, const Grid &grid);

/// Real Gaussian with standard deviation `sigma` of |psi|^2, mean momentum p0.
GridState gaussian_state(const Grid &grid, double center, double sigma, double p0 = 0.0,
                         double mass = 1.0, double hbar = 1.0);

/// Edge probability above which evolution reports AliasingRisk.
inline constexpr double kAliasingLimit = 1e-8;

/// Fraction of sum |spectrum|^2 carried by wavenumbers above 0.9 k_max.
double band_edge_fraction(const Grid &grid, std::span<const cplx> spectrum);

/// Probability in the outer 1% of samples (at least one) at each end.
double boundary_mass(const GridState &state);

Moments quadrature_moments(const GridState &state);

/// <a|b> by quadrature. Grids must match.
cplx inner_product(const GridState &a, const GridState &b);

/// Exact free-particle evolution through the momentum representation.
/// AliasingRisk when the momentum band edge or the position window edge
/// carries more than 1e-8 of the probability.
GridState free_evolve(const GridState &state, double t);

/// psi(x - s), by an index roll when s is a whole number of samples and by a
/// Fourier phase otherwise.
GridState translated(const GridState &state, double shift);

/// Band-limited interpolation of the amplitude; exact on grid nodes.
class SpectralInterpolant {
   public:
    explicit SpectralInterpolant(const GridState &state);
    cplx operator()(double x) const;

   private:
    Grid grid_;
    std::vector<cplx> values_;
    std::vector<cplx> spectrum_;
};

/// How a sampler turns the sampled density into positions.
enum class SamplingRule {
    /// piecewise-linear CDF between nodes, continuous output
    LinearCdf,
    /// node x_i with probability density_i * dx; reproduces quadrature moments
    Nodes,
};

/// Inverse-CDF sampler of |psi|^2.
class PositionSampler {
   public:
    explicit PositionSampler(const GridState &state, SamplingRule rule = SamplingRule::LinearCdf);
    PositionSampler(const Grid &grid, std::span<const double> density, SamplingRule rule = SamplingRule::LinearCdf);

    /// `uniform_draw` in [0, 1).
    double operator()(double uniform_draw) const;

   private:
    Grid grid_;
    SamplingRule rule_;
    std::vector<double> cdf_;
};

double sample_position(const GridState &state, double uniform_draw);

/// Precomputed kinetic phases exp(-i hbar k^2 t / 2m) for one grid and time.
class FreePropagator {
   public:
    FreePropagator(const Grid &grid, double t, double mass, double hbar);

    /// Acts on a momentum-space vector in place.
    void apply_spectrum(std::span<cplx> spectrum) const;
    GridState operator()(const GridState &state) const;
    double time() const { return t_; }

   private:
    Grid grid_;
    double t_;
    std::vector<cplx> phases_;
};

}  // namespace qmeas
