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

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>

namespace risisac {

using cplx = std::complex<double>;
using CVec = Eigen::VectorXcd;
using CMat = Eigen::MatrixXcd;
using RVec = Eigen::VectorXd;
using RMat = Eigen::MatrixXd;
using Point2 = Eigen::Vector2d;

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kInf = std::numeric_limits<double>::infinity();
inline constexpr cplx kJ{0.0, 1.0};

// Error hierarchy. Everything derives from std::runtime_error or
// std::invalid_argument so callers can catch broadly.
class InvalidInput : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

class DegenerateGeometry : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

class DegenerateChannel : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

class DimensionMismatch : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Requested QoS cannot be met; carries the best achievable value
// (rate in bits or SINR in linear scale, depending on the thrower).
class Infeasible : public std::runtime_error {
public:
    Infeasible(const std::string& what, double max_achievable)
        : std::runtime_error(what), max_achievable_(max_achievable) {}
    double max_achievable() const noexcept { return max_achievable_; }

private:
    double max_achievable_;
};

class SolverFailure : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

namespace detail {

inline void require_finite(double v, const char* name) {
    if (!std::isfinite(v)) throw InvalidInput(std::string(name) + " must be finite");
}

inline void require_positive(double v, const char* name) {
    if (!(v > 0.0) || !std::isfinite(v)) throw InvalidInput(std::string(name) + " must be positive");
}

inline void require_non_negative(double v, const char* name) {
    if (!(v >= 0.0) || !std::isfinite(v)) throw InvalidInput(std::string(name) + " must be non-negative");
}

inline void require_same_size(Eigen::Index a, Eigen::Index b, const char* what) {
    if (a != b)
        throw DimensionMismatch(std::string(what) + ": " + std::to_string(a) + " vs " + std::to_string(b));
}

}  // namespace detail

inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }
inline double linear_to_db(double lin) { return lin > 0.0 ? 10.0 * std::log10(lin) : -kInf; }
inline double dbm_to_watts(double dbm) { return std::pow(10.0, (dbm - 30.0) / 10.0); }
inline double deg_to_rad(double deg) { return deg * kPi / 180.0; }
inline double rad_to_deg(double rad) { return rad * 180.0 / kPi; }

// Unit-modulus projection, entrywise. Zero entries map to 1.
inline CVec project_unit_modulus(const CVec& v) {
    CVec out(v.size());
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        const double m = std::abs(v[i]);
        out[i] = m > 0.0 ? v[i] / m : cplx(1.0, 0.0);
    }
    return out;
}

// Projection onto the ball ||x||^2 <= radius_sq.
template <typename Derived>
typename Derived::PlainObject project_ball(const Eigen::MatrixBase<Derived>& v, double radius_sq) {
    const double n2 = v.squaredNorm();
    if (n2 <= radius_sq) return v;
    return v * std::sqrt(radius_sq / n2);
}

}  // namespace risisac
