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

// Twisted coherent states of a free mass.
//
// A twisted coherent state |mu nu alpha omega> is the eigenstate of
// mu*a + nu*a^dagger with |mu|^2 - |nu|^2 = 1, where
// a = sqrt(m omega / 2 hbar) x + i p / sqrt(2 hbar m omega). Its position
// representation is a Gaussian with a quadratic phase; the sign of
// xi = Im(conj(mu) nu) decides whether free evolution first narrows
// (xi > 0, "contractive") or immediately spreads the packet.

#pragma once

#include <complex>

namespace qmeas {

using cplx = std::complex<double>;

/// Validated twisted-coherent-state parameters. Only `make_tcs` builds one.
class TcsParams {
   public:
    cplx mu() const { return mu_; }
    cplx nu() const { return nu_; }
    double x0() const { return x0_; }
    double p0() const { return p0_; }
    double omega() const { return omega_; }
    double mass() const { return mass_; }
    double hbar() const { return hbar_; }

    /// Same squeezing, new phase-space centre.
    TcsParams recentered(double x0, double p0) const;

   private:
    friend TcsParams make_tcs(cplx, cplx, double, double, double, double, double);
    TcsParams() = default;

    cplx mu_{1.0, 0.0};
    cplx nu_{0.0, 0.0};
    double x0_ = 0.0;
    double p0_ = 0.0;
    double omega_ = 1.0;
    double mass_ = 1.0;
    double hbar_ = 1.0;
};

struct Moments {
    double mean_x = 0.0;
    double mean_p = 0.0;
    double var_x = 0.0;
    double var_p = 0.0;
    /// <dx dp + dp dx>
    double correlation = 0.0;
    double mean_energy = 0.0;
};

/// Throws NormalizationViolation when | |mu|^2 - |nu|^2 - 1 | > 1e-9 and
/// DomainError on nonpositive omega, mass or hbar. Values inside the
/// tolerance are rescaled onto the constraint surface.
TcsParams make_tcs(cplx mu, cplx nu, double x0 = 0.0, double p0 = 0.0, double omega = 1.0,
                   double mass = 1.0, double hbar = 1.0);

/// Convenience: the state with mu = sqrt(1+s^2), nu = i s chosen so that
/// Im(conj(mu) nu) equals `xi`. Any real xi is reachable.
TcsParams tcs_with_xi(double xi, double x0 = 0.0, double p0 = 0.0, double omega = 1.0,
                      double mass = 1.0, double hbar = 1.0);

double xi(const TcsParams &params);

/// Complex amplitude alpha built from (x0, p0).
cplx alpha(const TcsParams &params);

Moments moments(const TcsParams &params);

/// Normalized position amplitude with a positive real prefactor.
cplx wavefunction_at(const TcsParams &params, double x);

/// Position variance after free evolution for time t >= 0.
double position_variance_at(const TcsParams &params, double t);

/// Time at which free evolution minimizes the position variance; requires
/// xi > 0 (NotContractive otherwise).
double contraction_time(const TcsParams &params);

/// Standard deviation of position at the contraction time. Evaluated three
/// ways; NormalizationViolation is raised if they disagree beyond 1e-9
/// relative, which would mean the parameters were corrupted.
double min_position_uncertainty(const TcsParams &params);

/// hbar * tau / m, the squared free-mass limit used for ratios.
double sql_bound(double mass, double tau, double hbar);

}  // namespace qmeas
