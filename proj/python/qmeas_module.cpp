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

#include <pybind11/complex.h>
#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <fstream>
#include <sstream>

#include "qmeas/error.hpp"
#include "qmeas/experiment.hpp"
#include "qmeas/grid.hpp"
#include "qmeas/models.hpp"
#include "qmeas/opmeasure.hpp"
#include "qmeas/tcs.hpp"

namespace py = pybind11;
using namespace pybind11::literals;
using namespace qmeas;

namespace {

py::array_t<cplx> to_array(std::span<const cplx> v) { return py::array_t<cplx>(v.size(), v.data()); }
py::array_t<double> to_array(const std::vector<double> &v) { return py::array_t<double>(v.size(), v.data()); }

py::dict moments_dict(const Moments &m) {
    return py::dict("mean_x"_a = m.mean_x, "mean_p"_a = m.mean_p, "var_x"_a = m.var_x, "var_p"_a = m.var_p,
                    "correlation"_a = m.correlation, "mean_energy"_a = m.mean_energy);
}

AnalyticRoute parse_route(const std::string &route) {
    if (route == "auto") {
        return AnalyticRoute::Auto;
    }
    if (route == "direct") {
        return AnalyticRoute::Direct;
    }
    if (route == "moments") {
        return AnalyticRoute::Moments;
    }
    throw Error(ErrorKind::ConfigError, "route must be auto, direct or moments");
}

MeasurementModel as_model(py::handle h) {
    if (py::isinstance<VonNeumannModel>(h)) {
        return h.cast<VonNeumannModel>();
    }
    if (py::isinstance<GordonLouisellModel>(h)) {
        return h.cast<GordonLouisellModel>();
    }
    if (py::isinstance<ContractiveGLModel>(h)) {
        return h.cast<ContractiveGLModel>();
    }
    throw py::type_error("expected VonNeumannModel, GordonLouisellModel or ContractiveGLModel");
}

py::dict mc_dict(const MonteCarloSummary &s) {
    return py::dict("trials"_a = s.trials, "seed"_a = s.seed, "predictive_variance"_a = s.predictive_variance,
                    "standard_error"_a = s.standard_error, "posterior_variance_avg"_a = s.posterior_variance_avg,
                    "precision_avg"_a = s.precision_avg);
}

py::dict report_dict(const ExperimentReport &r) {
    py::dict d("model"_a = r.model, "tau"_a = r.tau, "route"_a = r.route,
               "predictive_variance"_a = r.predictive_variance, "sql_bound"_a = r.sql_bound,
               "sql_ratio"_a = r.sql_ratio, "precision_avg"_a = r.precision_avg,
               "posterior_variance_avg"_a = r.posterior_variance_avg,
               "decomposition_residual"_a = r.decomposition_residual, "readouts_used"_a = r.readouts_used,
               "excluded_readouts"_a = r.excluded_readouts);
    if (r.prior_independence_deviation) {
        d["prior_independence_deviation"] = *r.prior_independence_deviation;
    }
    if (r.monte_carlo) {
        d["monte_carlo"] = mc_dict(*r.monte_carlo);
    }
    return d;
}

}  // namespace

PYBIND11_MODULE(_qmeas, m) {
    m.doc() = "Repeated position measurements of a free mass";

    // kept alive for the life of the process; translators may run during shutdown
    static auto *error_type = new py::exception<Error>(m, "QmeasError", PyExc_RuntimeError);
    py::register_exception_translator([](std::exception_ptr p) {
        try {
            if (p) {
                std::rethrow_exception(p);
            }
        } catch (const Error &e) {
            py::object exc = py::reinterpret_borrow<py::object>(error_type->ptr())(e.what());
            exc.attr("kind") = std::string(to_string(e.kind()));
            PyErr_SetObject(error_type->ptr(), exc.ptr());
        }
    });

    // ------------------------------------------------------------ tcs
    py::class_<TcsParams>(m, "TcsParams")
        .def_property_readonly("mu", &TcsParams::mu)
        .def_property_readonly("nu", &TcsParams::nu)
        .def_property_readonly("x0", &TcsParams::x0)
        .def_property_readonly("p0", &TcsParams::p0)
        .def_property_readonly("omega", &TcsParams::omega)
        .def_property_readonly("mass", &TcsParams::mass)
        .def_property_readonly("hbar", &TcsParams::hbar)
        .def("recentered", &TcsParams::recentered, "x0"_a, "p0"_a);

    m.def("make_tcs", &make_tcs, "mu"_a, "nu"_a, "x0"_a = 0.0, "p0"_a = 0.0, "omega"_a = 1.0, "mass"_a = 1.0,
          "hbar"_a = 1.0);
    m.def("tcs_with_xi", &tcs_with_xi, "xi"_a, "x0"_a = 0.0, "p0"_a = 0.0, "omega"_a = 1.0, "mass"_a = 1.0,
          "hbar"_a = 1.0);
    m.def("xi", &xi);
    m.def("moments", [](const TcsParams &p) { return moments_dict(moments(p)); });
    m.def("wavefunction_at", &wavefunction_at, "params"_a, "x"_a);
    m.def("position_variance_at", &position_variance_at, "params"_a, "t"_a);
    m.def("contraction_time", &contraction_time);
    m.def("min_position_uncertainty", &min_position_uncertainty);
    m.def("sql_bound", &sql_bound, "hbar"_a, "tau"_a, "mass"_a);

    // ------------------------------------------------------------ grid
    py::class_<Grid>(m, "Grid")
        .def(py::init<double, double, std::size_t>(), "x_min"_a, "x_max"_a, "n"_a)
        .def_static("standard", &Grid::standard)
        .def_property_readonly("x_min", &Grid::x_min)
        .def_property_readonly("x_max", &Grid::x_max)
        .def_property_readonly("n", &Grid::n)
        .def_property_readonly("dx", &Grid::dx)
        .def_property_readonly("nodes", [](const Grid &g) {
            std::vector<double> xs(g.n());
            for (std::size_t i = 0; i < g.n(); ++i) {
                xs[i] = g.x(i);
            }
            return to_array(xs);
        });

    py::class_<GridState>(m, "GridState")
        .def(py::init([](const Grid &g, const std::vector<cplx> &amps, double mass, double hbar) {
                 return GridState(g, amps, mass, hbar);
             }),
             "grid"_a, "amplitudes"_a, "mass"_a = 1.0, "hbar"_a = 1.0)
        .def_property_readonly("grid", &GridState::grid)
        .def_property_readonly("amplitudes", [](const GridState &s) { return to_array(s.amplitudes()); })
        .def_property_readonly("density", [](const GridState &s) { return to_array(s.density()); })
        .def_property_readonly("mass", &GridState::mass)
        .def_property_readonly("hbar", &GridState::hbar)
        .def("norm", &GridState::norm)
        .def("normalized", &GridState::normalized);

    m.def("discretize", &discretize, "params"_a, "grid"_a);
    m.def("gaussian_state", &gaussian_state, "grid"_a, "center"_a, "sigma"_a, "p0"_a = 0.0, "mass"_a = 1.0,
          "hbar"_a = 1.0);
    m.def("free_evolve", &free_evolve, "state"_a, "t"_a);
    m.def("quadrature_moments", [](const GridState &s) { return moments_dict(quadrature_moments(s)); });
    m.def("boundary_mass", &boundary_mass);
    m.def("inner_product", &inner_product);

    // ------------------------------------------------------------ models
    py::class_<VonNeumannModel>(m, "VonNeumannModel")
        .def(py::init<GridState>(), "probe"_a)
        .def_property_readonly("probe_spread", &VonNeumannModel::probe_spread)
        .def_property_readonly("coupling_checked", &VonNeumannModel::coupling_checked);
    py::class_<GordonLouisellModel>(m, "GordonLouisellModel")
        .def(py::init([](GridState shape) { return GordonLouisellModel(std::move(shape), ExactPositionEffect{}); }),
             "posterior_shape"_a, "Exact position effects with posterior shape translated to the readout.");
    py::class_<ContractiveGLModel>(m, "ContractiveGLModel")
        .def(py::init<cplx, cplx, double, double, double>(), "mu"_a, "nu"_a, "omega"_a = 1.0, "mass"_a = 1.0,
             "hbar"_a = 1.0)
        .def_property_readonly("base", &ContractiveGLModel::base)
        .def_property_readonly("xi", &ContractiveGLModel::xi)
        .def("contraction_time", &ContractiveGLModel::contraction_time);

    m.def("model_name", [](py::handle model) { return model_name(as_model(model)); });
    m.def(
        "readout_density",
        [](py::handle model, const GridState &psi) { return to_array(readout_density(as_model(model), psi).values); },
        "model"_a, "state"_a);
    m.def(
        "posterior", [](py::handle model, const GridState &psi, double a) { return posterior(as_model(model), psi, a); },
        "model"_a, "prior"_a, "readout"_a);
    m.def(
        "precision", [](py::handle model, const GridState &psi) { return precision(as_model(model), psi); },
        "model"_a, "state"_a);
    m.def(
        "resolution", [](py::handle model, const GridState &psi) { return resolution(as_model(model), psi); },
        "model"_a, "state"_a);

    // ------------------------------------------------------------ experiment
    m.def("predict", &predict, "posterior"_a, "tau"_a);
    m.def(
        "predictive_uncertainty_analytic",
        [](py::handle model, const GridState &prior, double tau, std::size_t readout_bins, const std::string &route) {
            return report_dict(
                predictive_uncertainty_analytic(as_model(model), prior, tau, {readout_bins, parse_route(route)}));
        },
        "model"_a, "prior"_a, "tau"_a, "readout_bins"_a = 0, "route"_a = "auto");
    m.def(
        "monte_carlo",
        [](py::handle model, const GridState &prior, double tau, std::size_t trials, std::uint64_t seed,
           unsigned threads) {
            const MeasurementModel mm = as_model(model);
            MonteCarloSummary s;
            {
                py::gil_scoped_release release;
                s = monte_carlo(mm, prior, tau, {trials, seed, threads});
            }
            return mc_dict(s);
        },
        "model"_a, "prior"_a, "tau"_a, "trials"_a = 1000, "seed"_a = 1, "threads"_a = 1);
    m.def(
        "sweep",
        [](const std::vector<double> &xis, const std::vector<double> &taus, std::size_t readout_bins) {
            SweepOptions opts;
            opts.readout_bins = readout_bins;
            py::list rows;
            for (const SweepRow &r : sweep(xis, taus, opts)) {
                rows.append(py::dict("xi"_a = r.xi, "tau"_a = r.tau, "predictive_variance"_a = r.predictive_variance,
                                     "sql_bound"_a = r.sql_bound, "sql_ratio"_a = r.sql_ratio));
            }
            return rows;
        },
        "xis"_a, "taus"_a = std::vector<double>{}, "readout_bins"_a = 256);
    m.def("run_experiment", [](const std::string &config_path) {
        return report_dict(run_experiment(load_config(config_path)));
    });

    // ------------------------------------------------------------ opmeasure
    py::class_<FiniteOperationMeasure>(m, "FiniteOperationMeasure")
        .def(py::init<std::vector<std::string>, std::vector<std::vector<Matrix>>>(), "labels"_a, "kraus"_a)
        .def_property_readonly("dim", &FiniteOperationMeasure::dim)
        .def_property_readonly("labels", &FiniteOperationMeasure::labels)
        .def("kraus", &FiniteOperationMeasure::kraus, "outcome"_a)
        .def("index_of", &FiniteOperationMeasure::index_of, "label"_a)
        .def("__len__", &FiniteOperationMeasure::size);

    m.def("von_neumann_discrete", &von_neumann_discrete, "dim"_a);
    m.def("read_measure", [](const std::string &path) {
        std::ifstream in(path);
        if (!in) {
            throw Error(ErrorKind::ConfigError, "cannot open measure file '" + path + "'");
        }
        return read_measure(in);
    });
    m.def("probability", [](const FiniteOperationMeasure &om, std::size_t outcome, const Matrix &rho) {
        return probability(om, outcome, DensityOperator(rho));
    });
    m.def("posterior_state", [](const FiniteOperationMeasure &om, std::size_t outcome, const Matrix &rho) {
        return Matrix(posterior(om, outcome, DensityOperator(rho)).matrix());
    });
    m.def("effects", [](const FiniteOperationMeasure &om) { return effect_measure(om).effects; });
    m.def("is_completely_positive", [](const FiniteOperationMeasure &om) {
        const CpCertificate c = is_completely_positive(om);
        return py::dict("completely_positive"_a = c.completely_positive, "min_eigenvalue"_a = c.min_eigenvalue);
    });
    m.def("check_weak_repeatability", [](const FiniteOperationMeasure &om, const std::vector<Matrix> &rhos,
                                         double tolerance) {
        std::vector<DensityOperator> tests;
        for (const Matrix &r : rhos) {
            tests.emplace_back(r);
        }
        const RepeatabilityReport r = check_weak_repeatability(om, tests, tolerance);
        return py::dict("passed"_a = r.passed, "max_violation"_a = r.max_violation, "worst_b"_a = r.worst_b,
                        "worst_c"_a = r.worst_c);
    }, "measure"_a, "densities"_a, "tolerance"_a = 1e-9);
    m.def("dilate", [](const FiniteOperationMeasure &om) {
        const Realization r = dilate(om);
        return py::dict("system_dim"_a = r.system_dim, "probe_dim"_a = r.probe_dim, "probe_state"_a = r.probe_state,
                        "unitary"_a = r.unitary, "probe_projectors"_a = r.probe_projectors,
                        "unitarity_defect"_a = unitarity_defect(r));
    });

    // ------------------------------------------------------------ cli
    m.def(
        "run_cli",
        [](const std::vector<std::string> &args) {
            std::ostringstream out, err;
            const int code = run_cli(args, out, err);
            return py::make_tuple(code, out.str(), err.str());
        },
        "args"_a, "Run a command-line invocation in-process; returns (exit_code, stdout, stderr).");
}
