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

#include "qmeas/tcs.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include "qmeas/error.hpp"

namespace qmeas {

namespace {

constexpr double kConstraintTolerance = 1e-9;

void require_positive(double value, const char *name) {
    if (!(value > 0.0) || !std::isfinite(value)) {
        std::ostringstream msg;
        msg << name << " must be positive and finite, got " << value;
        throw Error(ErrorKind::DomainError, msg.str());
    }
}

}  // namespace

TcsParams TcsParams::recentered(double x0, double p0) const {
    TcsParams out = *this;
    out.x0_ = x0;
    out.p0_ = p0;
    return out;
}

TcsParams make_tcs(cplx mu, cplx nu, double x0, double p0, double omega, double mass, double hbar) {
    require_positive(omega, "omega");
    require_positive(mass, "mass");
    require_positive(hbar, "hbar");
    if (!std::isfinite(x0) || !std::isfinite(p0)) {
        throw Error(ErrorKind::DomainError, "x0 and p0 must be finite");
    }
    double constraint = std::norm(mu) - std::norm(nu);
    if (!std::isfinite(constraint) || std::abs(constraint - 1.0) > kConstraintTolerance) {
        std::ostringstream msg;
        msg << "|mu|^2 - |nu|^2 = " << constraint << ", expected 1";
        throw Error(ErrorKind::NormalizationViolation, msg.str());
    }
    double scale = 1.0 / std::sqrt(constraint);
    TcsParams p;
    p.mu_ = mu * scale;
    p.nu_ = nu * scale;
    p.x0_ = x0;
    p.p0_ = p0;
    p.omega_ = omega;
    p.mass_ = mass;
    p.hbar_ = hbar;
    return p;
}

TcsParams tcs_with_xi(double xi_value, double x0, double p0, double omega, double mass, double hbar) {
    if (!std::isfinite(xi_value)) {
        throw Error(ErrorKind::DomainError, "xi must be finite");
    }
    // xi = s sqrt(1+s^2)  =>  s^2 = (sqrt(1 + 4 xi^2) - 1) / 2
    double s2 = 0.5 * (std::sqrt(1.0 + 4.0 * xi_value * xi_value) - 1.0);
    double s = std::copysign(std::sqrt(s2), xi_value);
    return make_tcs(cplx(std::sqrt(1.0 + s2), 0.0), cplx(0.0, s), x0, p0, omega, mass, hbar);
}

double xi(const TcsParams &params) { return std::imag(std::conj(params.mu()) * params.nu()); }

cplx alpha(const TcsParams &params) {
    double m = params.mass(), w = params.omega(), hb = params.hbar();
    return {std::sqrt(m * w / (2.0 * hb)) * params.x0(), params.p0() / std::sqrt(2.0 * hb * m * w)};
}

Moments moments(const TcsParams &params) {
    double m = params.mass(), w = params.omega(), hb = params.hbar();
    double minus = std::norm(params.mu() - params.nu());
    double plus = std::norm(params.mu() + params.nu());
    Moments out;
    out.mean_x = params.x0();
    out.mean_p = params.p0();
    out.var_x = hb * minus / (2.0 * m * w);
    out.var_p = hb * m * w * plus / 2.0;
    out.correlation = -2.0 * hb * xi(params);
    out.mean_energy = (out.mean_p * out.mean_p + out.var_p) / (2.0 * m);
    return out;
}

cplx wavefunction_at(const TcsParams &params, double x) {
    double m = params.mass(), w = params.omega(), hb = params.hbar();
    double minus = std::norm(params.mu() - params.nu());
    double prefactor = std::pow(m * w / (std::numbers::pi * hb * minus), 0.25);
    double dx = x - params.x0();
    // The momentum phase carries 1/hbar so that <p> = p0 for any hbar.
    cplx exponent = -(m * w / (2.0 * hb)) * cplx(1.0, 2.0 * xi(params)) / minus * (dx * dx) +
                    cplx(0.0, params.p0() * dx / hb);
    return prefactor * std::exp(exponent);
}

double position_variance_at(const TcsParams &params, double t) {
    if (!(t >= 0.0)) {
        throw Error(ErrorKind::DomainError, "time must be nonnegative");
    }
    double m = params.mass(), w = params.omega(), hb = params.hbar();
    double wt = w * t;
    return hb / (2.0 * m * w) *
           (std::norm(params.mu() - params.nu()) - 4.0 * xi(params) * wt +
            std::norm(params.mu() + params.nu()) * wt * wt);
}

double contraction_time(const TcsParams &params) {
    double x = xi(params);
    if (!(x > 0.0)) {
        throw Error(ErrorKind::NotContractive, "xi = " + std::to_string(x) + " is not positive");
    }
    return 2.0 * x / (params.omega() * std::norm(params.mu() + params.nu()));
}

double min_position_uncertainty(const TcsParams &params) {
    double tau = contraction_time(params);
    double x = xi(params);
    Moments mom = moments(params);
    double from_momentum = params.hbar() / (2.0 * std::sqrt(mom.var_p));
    double from_initial = std::sqrt(mom.var_x) / std::sqrt(1.0 + 4.0 * x * x);
    double from_time = std::sqrt(params.hbar() * tau / (4.0 * x * params.mass()));
    auto close = [](double a, double b) { return std::abs(a - b) <= 1e-9 * std::max(a, b); };
    if (!close(from_momentum, from_initial) || !close(from_momentum, from_time)) {
        throw Error(ErrorKind::NormalizationViolation, "closed forms of the minimum width disagree");
    }
    return from_momentum;
}

double sql_bound(double mass, double tau, double hbar) {
    require_positive(mass, "mass");
    require_positive(tau, "tau");
    require_positive(hbar, "hbar");
    return hbar * tau / mass;
}

}  // namespace qmeas
