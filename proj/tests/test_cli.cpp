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

#include <filesystem>
#include <fstream>
#include <sstream>

#include "qmeas/experiment.hpp"

using namespace qmeas;

namespace {

struct Run {
    int code;
    std::string out, err;
};

Run cli(std::vector<std::string> args) {
    std::ostringstream out, err;
    const int code = run_cli(args, out, err);
    return {code, out.str(), err.str()};
}

std::string source(const std::string &rel) { return std::string(QMEAS_SOURCE_DIR) + "/" + rel; }

std::size_t count_lines(const std::string &s) {
    std::size_t n = 0;
    for (char c : s) {
        n += c == '\n';
    }
    return n;
}

}  // namespace

TEST_SUITE("cli") {
    TEST_CASE("repeat prints the analytic report") {
        const Run r = cli({"repeat", "--config", source("configs/breach.cfg"), "--trials", "0", "--readout-bins", "256"});
        CHECK(r.code == 0);
        CHECK(r.out.find("predictive_variance = 0.166666666667") != std::string::npos);
        CHECK(r.out.find("model = contractive") != std::string::npos);
        CHECK(r.out.find("prior_independence_deviation") != std::string::npos);
    }

    TEST_CASE("sweep table") {
        const Run r = cli({"sweep", "--xi", "0.5,1,2,5,25", "--at-contraction-time"});
        CHECK(r.code == 0);
        CHECK(r.out.rfind("xi,tau,predictive_variance,sql_bound,sql_ratio\n", 0) == 0);
        CHECK(count_lines(r.out) == 6);
    }

    TEST_CASE("tcs curve") {
        const Run r = cli({"tcs", "--mu", "1.4142135623730951,0", "--nu", "0,1", "--steps", "4"});
        CHECK(r.code == 0);
        CHECK(r.out.find("t,variance_closed_form,variance_grid") != std::string::npos);
        const Run narrow = cli({"tcs", "--x-min", "-1", "--x-max", "1", "--n", "64"});
        CHECK(narrow.code == 3);
        CHECK(narrow.err.find("GridTooNarrow") != std::string::npos);
    }

    TEST_CASE("dilate demo") {
        const Run ok = cli({"dilate-demo", "--measure", source("configs/smeared3.kraus")});
        CHECK(ok.code == 0);
        CHECK(ok.out.find("completely_positive = true") != std::string::npos);
        CHECK(cli({"dilate-demo", "--measure", "/nonexistent/m.kraus"}).code == 2);
    }

    TEST_CASE("usage and configuration errors") {
        CHECK(cli({"frobnicate"}).code == 2);
        CHECK(cli({}).code == 2);
        CHECK(cli({"--help"}).code == 0);
        CHECK(cli({"repeat"}).code == 2);
        CHECK(cli({"sweep", "--xi", "abc"}).code == 2);

        const auto path = std::filesystem::temp_directory_path() / "qmeas_cli_bad.cfg";
        {
            std::ofstream f(path);
            f << "[system]\nmass = 1\nhbar = -x\n";
        }
        const Run bad = cli({"repeat", "--config", path.string()});
        CHECK(bad.code == 2);
        CHECK(bad.err.find("line 3") != std::string::npos);
        std::filesystem::remove(path);
    }
}
