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

#include "risisac/array_geometry.hpp"
#include "risisac/rng.hpp"

#include <optional>

namespace risisac {

// Optional replacements for the geometry-derived complex path gains.
// Used for analytic studies (unit gains, switched-off paths).
struct GainOverrides {
    std::optional<cplx> alpha_t;
    std::optional<cplx> alpha_r;
    std::optional<cplx> beta_t;
    std::optional<cplx> beta_r;
    std::optional<cplx> bu_gain;  // BS -> user direct link
    std::optional<cplx> ru_gain;  // RIS -> user link
};

// Planar deployment. The BS hosts both the transmit (L_T) and the receive
// (L_S) ULA; every array has its broadside along the global +x axis.
struct Scene {
    Point2 bs_position{0.0, 0.0};
    Point2 ris_position{30.0, 30.0};
    Point2 target_position{40.0, 0.0};
    std::optional<Point2> user_position;

    int l_t = 15;
    int l_s = 15;
    int n_ris = 0;
    double spacing_wavelengths = 0.5;

    double pathloss_exp_direct = 2.5;
    double pathloss_exp_ris = 2.2;
    double carrier_frequency_hz = 3.0e9;

    double noise_power_sensing = 1.0e-9;  // sigma_s^2 [W]
    double noise_power_comms = 1.0e-9;    // sigma_c^2 [W]
    double target_gain_var = 1.0;         // sigma_eta^2
    int samples = 1;                      // T
    double transmit_power = 1.0;          // P_T [W]

    bool blocked_direct = false;
    // false: G = beta a(omega_t) b(omega_t)^H literally; true: the RIS-side
    // steering vector uses the geometric RIS->BS bearing instead.
    bool geometric_ris_departure = false;

    std::uint64_t seed = 0;  // path-gain phases
    GainOverrides overrides;

    UlaGeometry tx_array() const { return {l_t, spacing_wavelengths}; }
    UlaGeometry rx_array() const { return {l_s, spacing_wavelengths}; }
    UlaGeometry ris_array() const { return {std::max(n_ris, 1), spacing_wavelengths}; }

    void validate() const {
        tx_array().validate();
        rx_array().validate();
        if (n_ris < 0) throw InvalidInput("Scene: n_ris must be >= 0");
        detail::require_positive(spacing_wavelengths, "spacing_wavelengths");
        detail::require_positive(noise_power_sensing, "noise_power_sensing");
        detail::require_positive(noise_power_comms, "noise_power_comms");
        detail::require_positive(transmit_power, "transmit_power");
        detail::require_positive(carrier_frequency_hz, "carrier_frequency_hz");
        detail::require_non_negative(target_gain_var, "target_gain_var");
        detail::require_finite(pathloss_exp_direct, "pathloss_exp_direct");
        detail::require_finite(pathloss_exp_ris, "pathloss_exp_ris");
        if (samples < 1) throw InvalidInput("Scene: samples must be >= 1");
    }
};

struct SceneAngles {
    double theta1 = 0.0;       // BS -> target
    double theta2 = 0.0;       // RIS -> target
    double omega_t = 0.0;      // BS -> RIS
    double ris_to_bs = 0.0;    // RIS -> BS (geometric departure)
    double user_bs = 0.0;      // BS -> user
    double user_ris = 0.0;     // RIS -> user
};

// Bearing of `to` seen from `from`, measured from the +x broadside axis.
inline double bearing(const Point2& from, const Point2& to) {
    const Point2 d = to - from;
    if (d.norm() <= 0.0) throw DegenerateGeometry("coincident positions");
    return std::atan2(d.y(), d.x());
}

inline SceneAngles angles_from_geometry(const Scene& s) {
    SceneAngles a;
    a.theta1 = bearing(s.bs_position, s.target_position);
    if (s.n_ris > 0) {
        a.theta2 = bearing(s.ris_position, s.target_position);
        a.omega_t = bearing(s.bs_position, s.ris_position);
        a.ris_to_bs = bearing(s.ris_position, s.bs_position);
    }
    if (s.user_position) {
        a.user_bs = bearing(s.bs_position, *s.user_position);
        if (s.n_ris > 0) a.user_ris = bearing(s.ris_position, *s.user_position);
    }
    return a;
}

// Amplitude d^(-exponent/2): power falls as d^-exponent, unit gain at 1 m.
inline double pathloss_amplitude(double distance, double exponent) {
    if (!(distance > 0.0) || !std::isfinite(distance)) throw InvalidInput("pathloss_amplitude: distance must be > 0");
    detail::require_finite(exponent, "pathloss exponent");
    return std::pow(distance, -0.5 * exponent);
}

// Phi-independent link quantities.
struct LinkSet {
    SceneAngles angles;
    cplx alpha_t{0.0}, alpha_r{0.0}, beta_t{0.0}, beta_r{0.0};
    CVec a_t;         // a_t(theta1), L_T
    CVec a_r;         // a_r(theta1), L_S
    CVec a_t_dot;     // d a_t / d theta1
    CVec a_r_dot;     // d a_r / d theta1
    CVec b_target;    // b(theta2), N
    CVec b_target_dot;
    CMat G_t;         // L_T x N
    CMat G_r;         // L_S x N
    CVec h_bu;        // L_T (empty without user)
    CVec h_ru;        // N   (empty without user)
    bool has_user = false;

    int n_ris() const { return static_cast<int>(b_target.size()); }
};

// G_t = beta_t a_t(omega_t) b^H(omega_ris), G_r = beta_r a_r(omega_t) b^H(omega_ris).
struct RisDyads {
    CMat G_t;
    CMat G_r;
};

namespace detail {

struct LinkGains {
    cplx alpha_t, alpha_r, beta_t, beta_r, bu, ru;
};

// Phases are drawn in a fixed order from the scene seed so that scenes
// differing only in array sizes share identical path gains.
inline LinkGains draw_link_gains(const Scene& s) {
    Rng rng(s.seed);
    const double ph_at = rng.uniform_phase();
    const double ph_ar = rng.uniform_phase();
    const double ph_bt = rng.uniform_phase();
    const double ph_br = rng.uniform_phase();
    const double ph_bu = rng.uniform_phase();
    const double ph_ru = rng.uniform_phase();

    LinkGains g{};
    const double d_bt = (s.target_position - s.bs_position).norm();
    if (d_bt <= 0.0) throw DegenerateGeometry("BS and target coincide");
    const double amp_direct = pathloss_amplitude(d_bt, s.pathloss_exp_direct);
    g.alpha_t = s.overrides.alpha_t.value_or(std::polar(amp_direct, ph_at));
    g.alpha_r = s.overrides.alpha_r.value_or(std::polar(amp_direct, ph_ar));
    if (s.blocked_direct) {
        g.alpha_t = 0.0;
        g.alpha_r = 0.0;
    }

    double amp_ris_target = 1.0;
    if (s.n_ris > 0) {
        const double d_br = (s.ris_position - s.bs_position).norm();
        const double d_rt = (s.target_position - s.ris_position).norm();
        if (d_br <= 0.0 || d_rt <= 0.0) throw DegenerateGeometry("RIS coincides with BS or target");
        amp_ris_target = pathloss_amplitude(d_rt, s.pathloss_exp_ris);
        const double amp = pathloss_amplitude(d_br, s.pathloss_exp_ris) * amp_ris_target;
        g.beta_t = s.overrides.beta_t.value_or(std::polar(amp, ph_bt));
        g.beta_r = s.overrides.beta_r.value_or(std::polar(amp, ph_br));
    }

    if (s.user_position) {
        const double d_bu = (*s.user_position - s.bs_position).norm();
        if (d_bu <= 0.0) throw DegenerateGeometry("BS and user coincide");
        g.bu = s.overrides.bu_gain.value_or(std::polar(pathloss_amplitude(d_bu, s.pathloss_exp_direct), ph_bu));
        if (s.n_ris > 0) {
            const double d_ru = (*s.user_position - s.ris_position).norm();
            if (d_ru <= 0.0) throw DegenerateGeometry("RIS and user coincide");
            // G_t already carries the RIS->target hop; swap it for RIS->user.
            const double amp = pathloss_amplitude(d_ru, s.pathloss_exp_ris) / amp_ris_target;
            g.ru = s.overrides.ru_gain.value_or(std::polar(amp, ph_ru));
        }
    }
    return g;
}

}  // namespace detail

inline RisDyads build_ris_dyads(const Scene& s) {
    s.validate();
    const SceneAngles ang = angles_from_geometry(s);
    const detail::LinkGains g = detail::draw_link_gains(s);
    RisDyads d;
    if (s.n_ris == 0) {
        d.G_t = CMat::Zero(s.l_t, 0);
        d.G_r = CMat::Zero(s.l_s, 0);
        return d;
    }
    const UlaGeometry ris{s.n_ris, s.spacing_wavelengths};
    const double ris_side = s.geometric_ris_departure ? ang.ris_to_bs : ang.omega_t;
    const CVec b_inc = steering_vector(ris, ris_side);
    d.G_t = g.beta_t * steering_vector(s.tx_array(), ang.omega_t) * b_inc.adjoint();
    d.G_r = g.beta_r * steering_vector(s.rx_array(), ang.omega_t) * b_inc.adjoint();
    return d;
}

inline LinkSet build_links(const Scene& s) {
    s.validate();
    LinkSet L;
    L.angles = angles_from_geometry(s);
    const detail::LinkGains g = detail::draw_link_gains(s);
    L.alpha_t = g.alpha_t;
    L.alpha_r = g.alpha_r;
    L.beta_t = g.beta_t;
    L.beta_r = g.beta_r;

    const UlaGeometry tx = s.tx_array();
    const UlaGeometry rx = s.rx_array();
    L.a_t = steering_vector(tx, L.angles.theta1);
    L.a_r = steering_vector(rx, L.angles.theta1);
    L.a_t_dot = steering_derivative(tx, L.angles.theta1);
    L.a_r_dot = steering_derivative(rx, L.angles.theta1);

    const RisDyads dy = build_ris_dyads(s);
    L.G_t = dy.G_t;
    L.G_r = dy.G_r;
    if (s.n_ris > 0) {
        const UlaGeometry ris{s.n_ris, s.spacing_wavelengths};
        L.b_target = steering_vector(ris, L.angles.theta2);
        L.b_target_dot = steering_derivative(ris, L.angles.theta2);
    } else {
        L.b_target = CVec(0);
        L.b_target_dot = CVec(0);
    }

    if (s.user_position) {
        L.has_user = true;
        L.h_bu = g.bu * steering_vector(tx, L.angles.user_bs);
        if (s.n_ris > 0) {
            L.h_ru = g.ru * steering_vector(UlaGeometry{s.n_ris, s.spacing_wavelengths}, L.angles.user_ris);
        } else {
            L.h_ru = CVec(0);
        }
    }
    return L;
}

struct SensingChannels {
    CVec h_t;
    CVec h_r;
};

// h_t = alpha_t a_t(theta1) + G_t Phi b(theta2), h_r analogous.
// `phi` is taken as a raw vector so the map can be probed off the
// unit-modulus set (the RIS term is linear in phi).
inline SensingChannels build_sensing_channels(const LinkSet& L, const CVec& phi) {
    detail::require_same_size(phi.size(), L.b_target.size(), "RIS profile length");
    SensingChannels c;
    const CVec phi_b = phi.cwiseProduct(L.b_target);
    c.h_t = L.alpha_t * L.a_t;
    c.h_r = L.alpha_r * L.a_r;
    if (phi.size() > 0) {
        c.h_t += L.G_t * phi_b;
        c.h_r += L.G_r * phi_b;
    }
    return c;
}

// h_c = h_BU + G_t Phi h_RU.
inline CVec build_comms_channel(const LinkSet& L, const CVec& phi) {
    if (!L.has_user) throw InvalidInput("build_comms_channel: scene has no user");
    detail::require_same_size(phi.size(), L.h_ru.size(), "RIS profile length");
    CVec h = L.h_bu;
    if (phi.size() > 0) h += L.G_t * phi.cwiseProduct(L.h_ru);
    return h;
}

inline SensingChannels build_sensing_channels(const Scene& s, const CVec& phi) {
    return build_sensing_channels(build_links(s), phi);
}

inline CVec build_comms_channel(const Scene& s, const CVec& phi) {
    return build_comms_channel(build_links(s), phi);
}

// Everything needed downstream for one RIS profile.
struct ChannelSet {
    CVec h_t, h_r, h_c;
    CMat G_t, G_r;
    CVec h_bu, h_ru, b_target;
    cplx alpha_t, alpha_r, beta_t, beta_r;
};

inline ChannelSet compose_channels(const LinkSet& L, const CVec& phi) {
    ChannelSet c;
    const SensingChannels s = build_sensing_channels(L, phi);
    c.h_t = s.h_t;
    c.h_r = s.h_r;
    if (L.has_user) c.h_c = build_comms_channel(L, phi);
    c.G_t = L.G_t;
    c.G_r = L.G_r;
    c.h_bu = L.h_bu;
    c.h_ru = L.h_ru;
    c.b_target = L.b_target;
    c.alpha_t = L.alpha_t;
    c.alpha_r = L.alpha_r;
    c.beta_t = L.beta_t;
    c.beta_r = L.beta_r;
    return c;
}

// Unit-modulus RIS configuration.
class RisProfile {
public:
    RisProfile() = default;

    static RisProfile ones(int n) { return RisProfile(CVec::Ones(n)); }

    static RisProfile from_phasors(const CVec& phases, double tol = 1e-9) {
        for (Eigen::Index i = 0; i < phases.size(); ++i)
            if (std::abs(std::abs(phases[i]) - 1.0) > tol) throw InvalidInput("RisProfile: entries must be unit modulus");
        return RisProfile(phases);
    }

    static RisProfile from_angles(const RVec& radians) {
        CVec p(radians.size());
        for (Eigen::Index i = 0; i < radians.size(); ++i) p[i] = std::polar(1.0, radians[i]);
        return RisProfile(p);
    }

    const CVec& phasors() const { return phases_; }
    int size() const { return static_cast<int>(phases_.size()); }

    RVec angles() const {
        RVec a(phases_.size());
        for (Eigen::Index i = 0; i < phases_.size(); ++i) a[i] = std::arg(phases_[i]);
        return a;
    }

private:
    explicit RisProfile(CVec p) : phases_(std::move(p)) {}
    CVec phases_;
};

}  // namespace risisac
