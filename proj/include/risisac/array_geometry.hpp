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

namespace risisac {

// Uniform linear array. Element positions are centered on the array
// phase reference: m_k = k - (L-1)/2, k = 0..L-1, in units of spacing.
// Centering makes a(theta)^H d/dtheta a(theta) vanish identically.
struct UlaGeometry {
    int num_elements = 1;
    double spacing_wavelengths = 0.5;

    UlaGeometry() = default;
    UlaGeometry(int n, double spacing = 0.5) : num_elements(n), spacing_wavelengths(spacing) { validate(); }

    void validate() const {
        if (num_elements < 1) throw InvalidInput("UlaGeometry: num_elements must be >= 1");
        detail::require_positive(spacing_wavelengths, "UlaGeometry spacing");
    }

    double centered_index(int k) const { return k - 0.5 * (num_elements - 1); }

    bool operator==(const UlaGeometry&) const = default;
};

// Angles are radians, broadside = 0. Any finite angle is accepted: the
// response is periodic in sin(angle), so bearings behind the aperture
// alias onto the front half-plane like a physical ULA does.
inline CVec steering_vector(const UlaGeometry& geom, double angle) {
    geom.validate();
    detail::require_finite(angle, "steering angle");
    const double k = 2.0 * kPi * geom.spacing_wavelengths * std::sin(angle);
    CVec a(geom.num_elements);
    for (int i = 0; i < geom.num_elements; ++i) a[i] = std::polar(1.0, k * geom.centered_index(i));
    return a;
}

// d a(angle) / d angle.
inline CVec steering_derivative(const UlaGeometry& geom, double angle) {
    geom.validate();
    detail::require_finite(angle, "steering angle");
    const double k = 2.0 * kPi * geom.spacing_wavelengths;
    const double s = std::sin(angle);
    const double c = std::cos(angle);
    CVec d(geom.num_elements);
    for (int i = 0; i < geom.num_elements; ++i) {
        const double m = geom.centered_index(i);
        d[i] = kJ * (k * m * c) * std::polar(1.0, k * m * s);
    }
    return d;
}

}  // namespace risisac
