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

// Continuous position-measurement models of a free mass.
//
// Three models are provided:
//
//  * VonNeumannModel: linear coupling K x P to a probe prepared in Phi(Q).
//    The joint state after the coupling is psi(x) Phi(Q - x); the readout is
//    the probe position.
//  * GordonLouisellModel {|Psi_a><Phi_a|}: readout density |<Phi_a|psi>|^2
//    and a posterior Psi_a that does not depend on the prior. Both families
//    are translation families, Psi_a(x) = shape(x - a) and
//    Phi_a(x) = profile(x - a), or Phi_a = <a| (exact position).
//  * ContractiveGLModel {|mu nu a omega><a|}: exact position readout that
//    leaves the mass in a contractive state centred on the readout.
//
// Readout densities live on the same grid as the states. Integrals over the
// readout use the trapezoid rule and skip readouts whose probability is
// below 1e-12 of the maximum; averages are taken over the retained mass.

#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "qmeas/grid.hpp"
#include "qmeas/tcs.hpp"

namespace qmeas {

inline constexpr double kReadoutFloor = 1e-12;

class VonNeumannModel {
   public:
    /// `probe` must be normalized and its grid must contain Q = 0. A probe with
    /// nonzero <Q> or <P> is accepted but `coupling_checked()` is false.
    explicit VonNeumannModel(GridState probe);

    const GridState &probe() const { return probe_; }
    bool coupling_checked() const { return coupling_checked_; }
    /// Probe position spread Delta Q.
    double probe_spread() const { return probe_spread_; }
    /// Phi(a - x) sampled at the grid nodes x for a readout a.
    std::vector<cplx> response(double readout) const;

   private:
    GridState probe_;
    GridState mirrored_;
    bool coupling_checked_ = false;
    double probe_spread_ = 0.0;
};

/// The effect family Phi_a = <a|.
struct ExactPositionEffect {};

/// Phi_a(x) = profile(x - a). Samples are raw (not unit-normalized): the
/// family is complete only when the profile has a flat power spectrum with
/// dx^2 sum |profile|^2 = 1, e.g. a discrete delta of height 1/dx.
struct EffectProfile {
    Grid grid;
    /// profile(x_i) at the grid nodes; the grid must contain 0.
    std::vector<cplx> samples;
};

using EffectFamily = std::variant<ExactPositionEffect, EffectProfile>;

class GordonLouisellModel {
   public:
    /// Posterior Psi_a = shape translated by a.
    GordonLouisellModel(GridState posterior_shape, EffectFamily effect);

    const GridState &posterior_shape() const { return shape_; }
    const EffectFamily &effect() const { return effect_; }
    /// max |dx^2 sum_j Phi_a(x_i) conj(Phi_a(x_l)) - delta_il| over the grid.
    double completeness_defect() const { return completeness_defect_; }

   private:
    GridState shape_;
    EffectFamily effect_;
    double completeness_defect_ = 0.0;
};

class ContractiveGLModel {
   public:
    /// NotContractive unless Im(conj(mu) nu) > 0.
    ContractiveGLModel(cplx mu, cplx nu, double omega = 1.0, double mass = 1.0, double hbar = 1.0);
    explicit ContractiveGLModel(const TcsParams &params);

    /// |mu nu 0 omega>: <x> = <p> = 0.
    const TcsParams &base() const { return base_; }
    double xi() const;
    double contraction_time() const;

   private:
    TcsParams base_;
};

using MeasurementModel = std::variant<VonNeumannModel, GordonLouisellModel, ContractiveGLModel>;

std::string model_name(const MeasurementModel &model);

/// Readout density on the state grid.
struct ReadoutDensity {
    Grid grid;
    std::vector<double> values;

    double integral() const;
    double mean() const;
    double variance() const;
};

/// G(a, x): either exact (delta) or a translation-invariant convolution
/// profile g(a - x) sampled at the grid nodes.
class NoiseKernel {
   public:
    static NoiseKernel exact();
    /// `profile[i]` is g(x_i); the grid must contain 0.
    static NoiseKernel convolution(const Grid &grid, std::vector<double> profile);

    bool is_exact() const { return !profile_.has_value(); }
    /// G(a, x); for the exact kernel this is the integrable tag and returns
    /// 1 when a == x on the grid and 0 otherwise.
    double operator()(double a, double x) const;
    /// int da G(a, x).
    double normalization() const;
    /// int da (a - x) G(a, x).
    double bias() const;
    /// epsilon(x)^2 = int da (a - x)^2 G(a, x); independent of x here.
    double second_moment() const;
    const std::optional<std::pair<Grid, std::vector<double>>> &profile() const { return profile_; }

   private:
    std::optional<std::pair<Grid, std::vector<double>>> profile_;
};

/// Callable amplitude used by the closed-form two-body states.
using Wavefunction = std::function<cplx(double)>;

Wavefunction as_wavefunction(const GridState &state);
Wavefunction as_wavefunction(const TcsParams &params);

/// Object-probe amplitude Psi(x, Q), never materialized on a 2-D grid.
class TwoBodyState {
   public:
    explicit TwoBodyState(std::function<cplx(double, double)> amplitude) : amplitude_(std::move(amplitude)) {}

    cplx operator()(double x, double q) const { return amplitude_(x, q); }

    /// int dx |Psi(x, q)|^2 over the nodes of `object_grid`.
    double readout_density(double q, const Grid &object_grid) const;
    /// int dQ |Psi(x, Q)|^2 over the nodes of `probe_grid`.
    double object_density(double x, const Grid &probe_grid) const;
    /// x -> Psi(x, q), normalized; ZeroProbabilityReadout when it vanishes.
    GridState conditional_state(double q, const Grid &object_grid, double mass = 1.0, double hbar = 1.0) const;

   private:
    std::function<cplx(double, double)> amplitude_;
};

/// psi(x) Phi(Q - x).
TwoBodyState vn_joint_state(const VonNeumannModel &model, const GridState &psi);

/// Solution of the contractive coupling Hamiltonian after coupling time
/// t = kt / K, starting from psi(x) Phi(Q). DomainError unless kt in [0, 1].
TwoBodyState contractive_interaction(Wavefunction psi, Wavefunction probe, double kt);
TwoBodyState contractive_interaction(const GridState &psi, const GridState &probe, double kt);

/// int dx |psi(x)|^2 |Phi(Q - x)|^2 on the grid nodes.
ReadoutDensity vn_probability(const VonNeumannModel &model, const GridState &psi);
GridState vn_posterior(const VonNeumannModel &model, const GridState &psi, double q_bar);

/// |<Phi_a|psi>|^2; |psi(a)|^2 for exact-position effects.
/// CompletenessViolation if the effect family defect exceeds 1e-6.
ReadoutDensity gl_probability(const GordonLouisellModel &model, const GridState &psi);
ReadoutDensity gl_probability(const ContractiveGLModel &model, const GridState &psi);
GridState gl_posterior(const GordonLouisellModel &model, double a);
/// The discretized |mu nu a omega> on `grid`.
GridState gl_posterior(const ContractiveGLModel &model, const Grid &grid, double a);

ReadoutDensity readout_density(const MeasurementModel &model, const GridState &psi);
/// Post-measurement state for readout a (prior only matters for von Neumann).
GridState posterior(const MeasurementModel &model, const GridState &psi, double a);

/// IncompatibleModel if the effects are not multiplication operators in x.
NoiseKernel noise_kernel(const MeasurementModel &model);

/// epsilon(psi); zero for exact position effects.
double precision(const MeasurementModel &model, const GridState &psi);

struct ResolutionBreakdown {
    /// sigma(psi)^2
    double sigma_squared = 0.0;
    /// [Delta x(psi_a)^2]
    double posterior_variance = 0.0;
    /// [(a - <psi_a|x|psi_a>)^2]
    double offset_squared = 0.0;
    std::size_t excluded_readouts = 0;
};

ResolutionBreakdown resolution_breakdown(const MeasurementModel &model, const GridState &psi);
double resolution(const MeasurementModel &model, const GridState &psi);

struct UnbiasednessReport {
    bool passed = true;
    double max_deviation = 0.0;
    /// readout mean minus <x>, one per test state
    std::vector<double> bias;
};

UnbiasednessReport check_unbiasedness(const MeasurementModel &model, const std::vector<GridState> &test_states,
                                      double tolerance = 1e-7);

}  // namespace qmeas
