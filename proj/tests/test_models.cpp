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

#include <doctest.h>

#include <cmath>
#include <numbers>

#include "qmeas/error.hpp"
#include "qmeas/models.hpp"

using namespace qmeas;

namespace {

ErrorKind kind_of(auto &&fn) {
    try {
        fn();
    } catch (const Error &e) {
        return e.kind();
    }
    FAIL("no error thrown");
    return ErrorKind::ConfigError;
}

double gauss_density(double x, double c, double s) {
    return std::exp(-(x - c) * (x - c) / (2.0 * s * s)) / std::sqrt(2.0 * std::numbers::pi * s * s);
}

const Grid &small_grid() {
    static const Grid g(-16.0, 16.0, 256);
    return g;
}

}  // namespace

TEST_SUITE("models") {
    TEST_CASE("von Neumann probe validation") {
        const Grid &g = small_grid();
        const GridState base = gaussian_state(g, 0.0, 0.5);
        std::vector<cplx> amps(base.amplitudes().begin(), base.amplitudes().end());
        for (auto &a : amps) {
            a *= 1.1;
        }
        CHECK(kind_of([&] { VonNeumannModel(GridState(g, amps)); }) == ErrorKind::NormalizationViolation);
        const Grid off(-16.0, 16.05, 256);
        CHECK(kind_of([&] { VonNeumannModel(gaussian_state(off, 0.0, 0.5)); }) == ErrorKind::DomainError);
        const VonNeumannModel good(gaussian_state(g, 0.0, 0.5));
        CHECK(good.coupling_checked());
        CHECK(good.probe_spread() == doctest::Approx(0.5).epsilon(1e-10));
        CHECK_FALSE(VonNeumannModel(gaussian_state(g, 0.3, 0.5)).coupling_checked());
    }

    TEST_CASE("von Neumann readout density against direct convolution") {
        const Grid &g = small_grid();
        const double sp = 1.0, sq = 0.5;
        const GridState psi = gaussian_state(g, 0.5, sp, 0.7);
        const VonNeumannModel model(gaussian_state(g, 0.0, sq));
        const ReadoutDensity p = vn_probability(model, psi);
        double err = 0.0;
        for (std::size_t j = 0; j < g.n(); ++j) {
            double s = 0.0;
            for (std::size_t i = 0; i < g.n(); ++i) {
                s += gauss_density(g.x(i), 0.5, sp) * gauss_density(g.x(j) - g.x(i), 0.0, sq);
            }
            err = std::max(err, std::abs(p.values[j] - s * g.dx()));
        }
        CHECK(err < 1e-12);
        CHECK(p.integral() == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(p.mean() == doctest::Approx(0.5).epsilon(1e-12));
        CHECK(p.variance() == doctest::Approx(sp * sp + sq * sq).epsilon(1e-10));

        // the joint state marginal gives the same readout density
        const TwoBodyState joint = vn_joint_state(model, psi);
        for (std::size_t j : {100u, 128u, 140u, 170u}) {
            CHECK(joint.readout_density(g.x(j), g) == doctest::Approx(p.values[j]).epsilon(1e-9));
        }
    }

    TEST_CASE("von Neumann posterior and error measures") {
        const Grid &g = small_grid();
        const double sp = 1.2, sq = 0.4;
        const GridState psi = gaussian_state(g, -0.3, sp, 0.2);
        const MeasurementModel model = VonNeumannModel(gaussian_state(g, 0.0, sq));
        const double s = sp * sp + sq * sq;
        for (double a : {-1.0, 0.0, 0.75}) {
            const Moments m = quadrature_moments(posterior(model, psi, a));
            CHECK(m.var_x == doctest::Approx(sp * sp * sq * sq / s).epsilon(1e-10));
            CHECK(m.mean_x == doctest::Approx((sq * sq * -0.3 + sp * sp * a) / s).epsilon(1e-10));
        }
        CHECK(precision(model, psi) == doctest::Approx(sq).epsilon(1e-10));
        CHECK(resolution(model, psi) == doctest::Approx(sq).epsilon(1e-8));

        const ReadoutDensity p = readout_density(model, psi);
        const double eps2 = p.variance() - quadrature_moments(psi).var_x;
        CHECK(std::abs(eps2 - precision(model, psi) * precision(model, psi)) < 1e-7);

        const ResolutionBreakdown r = resolution_breakdown(model, psi);
        CHECK(r.sigma_squared == doctest::Approx(r.posterior_variance + r.offset_squared).epsilon(1e-12));
        CHECK(r.posterior_variance == doctest::Approx(sp * sp * sq * sq / s).epsilon(1e-8));
        CHECK(r.offset_squared == doctest::Approx(std::pow(sq, 4) / s).epsilon(1e-7));
    }

    TEST_CASE("unbiasedness") {
        const Grid &g = small_grid();
        const std::vector<GridState> states = {gaussian_state(g, 0.0, 1.0), gaussian_state(g, 2.0, 0.7, 1.0),
                                               gaussian_state(g, -1.5, 1.5)};
        const MeasurementModel centred = VonNeumannModel(gaussian_state(g, 0.0, 0.5));
        CHECK(check_unbiasedness(centred, states).passed);
        const MeasurementModel shifted = VonNeumannModel(gaussian_state(g, 0.3, 0.5));
        const UnbiasednessReport rep = check_unbiasedness(shifted, states);
        CHECK_FALSE(rep.passed);
        for (double b : rep.bias) {
            CHECK(b == doctest::Approx(0.3).epsilon(1e-10));
        }
        CHECK(noise_kernel(shifted).bias() == doctest::Approx(0.3).epsilon(1e-10));
    }

    TEST_CASE("Gordon-Louisell with exact position effects") {
        const Grid &g = small_grid();
        const GridState shape = gaussian_state(g, 0.0, 0.8);
        const MeasurementModel model = GordonLouisellModel(shape, ExactPositionEffect{});
        const GridState psi = gaussian_state(g, 1.0, 1.1, -0.4);
        const ReadoutDensity p = readout_density(model, psi);
        const std::vector<double> d = psi.density();
        for (std::size_t i = 0; i < g.n(); ++i) {
            CHECK(p.values[i] == d[i]);
        }
        CHECK(noise_kernel(model).is_exact());
        CHECK(precision(model, psi) == 0.0);
        CHECK(resolution(model, psi) == doctest::Approx(0.8).epsilon(1e-10));
        // the posterior forgets the prior
        const GridState a = posterior(model, psi, 2.0);
        const GridState b = posterior(model, gaussian_state(g, -3.0, 0.5), 2.0);
        CHECK(std::abs(inner_product(a, b) - 1.0) < 1e-14);
        CHECK(quadrature_moments(a).mean_x == doctest::Approx(2.0).epsilon(1e-12));
    }

    TEST_CASE("Gordon-Louisell effect profiles") {
        const Grid &g = small_grid();
        const GridState shape = gaussian_state(g, 0.0, 0.8);
        const GridState psi = gaussian_state(g, 0.5, 1.0);
        const std::size_t n = g.n(), z = *g.zero_index();

        // a Gaussian effect family is not complete
        const GridState bump = gaussian_state(g, 0.0, 0.5);
        const MeasurementModel smooth =
            GordonLouisellModel(shape, EffectProfile{g, {bump.amplitudes().begin(), bump.amplitudes().end()}});
        CHECK(std::get<GordonLouisellModel>(smooth).completeness_defect() > 1e-3);
        CHECK(kind_of([&] { readout_density(smooth, psi); }) == ErrorKind::CompletenessViolation);
        CHECK(kind_of([&] { noise_kernel(smooth); }) == ErrorKind::IncompatibleModel);

        // a discrete chirp has a flat power spectrum, so its translates are complete
        std::vector<cplx> chirp(n);
        for (std::size_t i = 0; i < n; ++i) {
            const double m = static_cast<double>((i + n - z) % n);
            chirp[i] = std::polar(1.0, std::numbers::pi * m * m / n) / (g.dx() * std::sqrt(double(n)));
        }
        const GordonLouisellModel chirped(shape, EffectProfile{g, chirp});
        CHECK(chirped.completeness_defect() < 1e-12);
        const ReadoutDensity p = gl_probability(chirped, psi);
        CHECK(p.integral() == doctest::Approx(1.0).epsilon(1e-12));
        // oracle for a single readout by direct summation
        const std::size_t j = 140;
        cplx c = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            c += std::conj(chirp[(i + n - j + z) % n]) * psi.amplitudes()[i];
        }
        CHECK(p.values[j] == doctest::Approx(std::norm(c * g.dx())).epsilon(1e-12));

        // an offset delta is complete but biased
        std::vector<cplx> delta(n, 0.0);
        delta[z + 3] = 1.0 / g.dx();
        const MeasurementModel offset = GordonLouisellModel(shape, EffectProfile{g, delta});
        const NoiseKernel k = noise_kernel(offset);
        CHECK_FALSE(k.is_exact());
        CHECK(k.bias() == doctest::Approx(-3.0 * g.dx()));
        CHECK(check_unbiasedness(offset, {psi}).bias[0] == doctest::Approx(-3.0 * g.dx()).epsilon(1e-10));

        std::vector<cplx> centred(n, 0.0);
        centred[z] = 1.0 / g.dx();
        CHECK(noise_kernel(GordonLouisellModel(shape, EffectProfile{g, centred})).is_exact());
    }

    TEST_CASE("contractive model") {
        CHECK(kind_of([] { ContractiveGLModel(1.0, 0.0); }) == ErrorKind::NotContractive);
        CHECK(kind_of([] { ContractiveGLModel(tcs_with_xi(-0.5)); }) == ErrorKind::NotContractive);
        const ContractiveGLModel model({std::sqrt(2.0), 0.0}, {0.0, 1.0});
        CHECK(model.xi() == doctest::Approx(std::sqrt(2.0)));
        const Grid g = Grid::standard();
        const MeasurementModel m = model;
        const GridState p1 = gaussian_state(g, 0.0, 1.0), p2 = gaussian_state(g, 3.0, 0.3, 2.0);
        for (double a : {-2.0, 0.0, 1.5}) {
            const GridState post = posterior(m, p1, a);
            const Moments q = quadrature_moments(post);
            CHECK(q.mean_x == doctest::Approx(a).epsilon(1e-12).scale(1.0));
            CHECK(std::abs(q.mean_p) < 1e-12);
            CHECK(q.var_x == doctest::Approx(1.5).epsilon(1e-12));
            CHECK(std::abs(inner_product(post, posterior(m, p2, a)) - 1.0) < 1e-14);
        }
        // sigma^2 = hbar |mu - nu|^2 / (2 m omega)
        CHECK(resolution(m, p1) * resolution(m, p1) == doctest::Approx(1.5).epsilon(1e-10));
        CHECK(precision(m, p1) == 0.0);
        CHECK(model_name(m) == "contractive");
    }

    TEST_CASE("contractive interaction") {
        const Grid g(-12.0, 12.0, 128);
        const GridState psi = gaussian_state(g, 0.5, 1.0, 0.3);
        const GridState probe = gaussian_state(g, 0.0, 0.8);
        CHECK(kind_of([&] { contractive_interaction(psi, probe, 1.5); }) == ErrorKind::DomainError);
        CHECK(kind_of([&] { contractive_interaction(psi, probe, -0.1); }) == ErrorKind::DomainError);

        const TwoBodyState none = contractive_interaction(psi, probe, 0.0);
        for (std::size_t i : {40u, 64u, 90u}) {
            for (std::size_t j : {50u, 64u, 77u}) {
                const cplx want = psi.amplitudes()[i] * probe.amplitudes()[j];
                CHECK(std::abs(none(g.x(i), g.x(j)) - want) < 1e-12);
            }
        }

        const TwoBodyState full = contractive_interaction(psi, probe, 1.0);
        const std::vector<double> d = psi.density();
        for (std::size_t j : {40u, 64u, 70u}) {
            CHECK(full.readout_density(g.x(j), g) == doctest::Approx(d[j]).epsilon(1e-9));
        }

        // grid interpolants are periodic and the sheared arguments leave the
        // window, so the norm check uses closed-form amplitudes
        const TwoBodyState half = contractive_interaction(as_wavefunction(make_tcs(1.0, 0.0, 0.5, 0.3)),
                                                          as_wavefunction(make_tcs(1.0, 0.0, 0.0, 0.0, 1.0 / 1.28)), 0.5);
        double total = 0.0;
        for (std::size_t j = 0; j < g.n(); ++j) {
            total += half.readout_density(g.x(j), g);
        }
        CHECK(total * g.dx() == doctest::Approx(1.0).epsilon(1e-9));
    }
}
