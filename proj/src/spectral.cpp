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

#include "qmeas/spectral.hpp"

#include <fftw3.h>

#include <map>
#include <mutex>
#include <vector>

namespace qmeas::spectral {

namespace {

struct PlanPair {
    fftw_plan fwd = nullptr;
    fftw_plan bwd = nullptr;
};

// The FFTW planner is not reentrant; executing an existing plan on new
// arrays is. Plans are created once per size and kept for the process.
const PlanPair &plans_for(std::size_t n) {
    static std::mutex mutex;
    static std::map<std::size_t, PlanPair> cache;
    std::lock_guard<std::mutex> lock(mutex);
    auto it = cache.find(n);
    if (it != cache.end()) {
        return it->second;
    }
    std::vector<std::complex<double>> scratch(n);
    auto *buf = reinterpret_cast<fftw_complex *>(scratch.data());
    const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
    PlanPair p;
    p.fwd = fftw_plan_dft_1d(static_cast<int>(n), buf, buf, FFTW_FORWARD, flags);
    p.bwd = fftw_plan_dft_1d(static_cast<int>(n), buf, buf, FFTW_BACKWARD, flags);
    return cache.emplace(n, p).first->second;
}

}  // namespace

void forward(std::span<std::complex<double>> data) {
    const PlanPair &p = plans_for(data.size());
    auto *buf = reinterpret_cast<fftw_complex *>(data.data());
    fftw_execute_dft(p.fwd, buf, buf);
}

void inverse(std::span<std::complex<double>> data) {
    const PlanPair &p = plans_for(data.size());
    auto *buf = reinterpret_cast<fftw_complex *>(data.data());
    fftw_execute_dft(p.bwd, buf, buf);
    const double scale = 1.0 / static_cast<double>(data.size());
    for (auto &v : data) {
        v *= scale;
    }
}

}  // namespace qmeas::spectral
