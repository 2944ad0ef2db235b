// SPDX-License-Identifier: Apache-2.0
//
// risisac: RIS-aided sensing and ISAC beamforming toolkit
// Copyright (C) 2026 The risisac authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

#pragma once

#include "risisac/common.hpp"

#include <cstdint>
#include <random>

namespace risisac {

// SplitMix64 finalizer; used to derive independent per-task seeds from a
// master seed so results do not depend on scheduling order.
constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) noexcept {
    return splitmix64(master ^ splitmix64(stream + 0x632BE59BD9B4E019ULL));
}

class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    Rng split(std::uint64_t stream) const { return Rng(derive_seed(seed_of_engine(), stream)); }

    double uniform() { return std::uniform_real_distribution<double>(0.0, 1.0)(engine_); }

    double uniform_phase() { return 2.0 * kPi * uniform(); }

    cplx unit_phasor() { return std::polar(1.0, uniform_phase()); }

    double normal() { return normal_(engine_); }

    // Circularly-symmetric complex Gaussian with E|z|^2 = variance.
    cplx complex_normal(double variance = 1.0) {
        const double s = std::sqrt(variance / 2.0);
        const double re = normal();
        const double im = normal();
        return {s * re, s * im};
    }

    CVec complex_normal_vector(Eigen::Index n, double variance = 1.0) {
        CVec v(n);
        for (Eigen::Index i = 0; i < n; ++i) v[i] = complex_normal(variance);
        return v;
    }

    CVec unit_modulus_vector(Eigen::Index n) {
        CVec v(n);
        for (Eigen::Index i = 0; i < n; ++i) v[i] = unit_phasor();
        return v;
    }

    std::mt19937_64& engine() { return engine_; }

private:
    std::uint64_t seed_of_engine() const {
        std::mt19937_64 copy = engine_;
        return copy();
    }

    std::mt19937_64 engine_;
    std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace risisac
