#pragma once

// Numerical oracles that cut across modules: invariance of the cylinder
// exterior, positivity at the axis for interface profiles, the phi-function of
// the monotonicity argument and the two shooting bounds behind the
// non-existence gap.

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "blowup/integrate.hpp"
#include "blowup/model.hpp"
#include "blowup/phase.hpp"
#include "blowup/shooting.hpp"

namespace blowup {

/// Tolerance below zero that still counts as "outside the cylinder".
inline constexpr double kCylinderTol = 1e-8;

namespace detail {

// Stops orbits that run off towards infinity before they overflow.
inline Event<3> escape_event(double bound) {
    return {EventKind::StateBound, Direction::Rising, true, [bound](double, const Vec<3>& y) {
                return std::max({std::abs(y[0]), std::abs(y[1]), std::abs(y[2])}) - bound;
            }};
}

}  // namespace detail

struct CylinderCheck {
    /// true: stayed outside; false: went inside; nullopt: integration failed.
    std::optional<bool> outside;
    double min_value = std::numeric_limits<double>::infinity();
    Termination reason = Termination::Completed;
};

/// Integrates the main system from a start outside the cylinder and watches
/// cylinder_value on every stored sample.
inline CylinderCheck cylinder_invariance_check(const Params& p, const PhaseState& start, double eta_max,
                                               const IntegratorConfig& cfg = {}, double escape_bound = 1e6) {
    if (!(cylinder_value(p, start) > 0.0)) throw DomainError("cylinder_invariance_check: start must be outside");
    if (!(eta_max > 0)) throw DomainError("cylinder_invariance_check: eta_max must be > 0");
    const std::vector<Event<3>> ev{detail::escape_event(escape_bound)};
    const Orbit o = integrate_main(p, start, eta_max, ev, cfg);
    CylinderCheck c;
    c.reason = o.reason;
    for (const auto& s : o.states) c.min_value = std::min(c.min_value, cylinder_value(p, s));
    if (c.min_value <= -kCylinderTol) {
        c.outside = false;
    } else if (o.reason == Termination::Completed || o.reason == Termination::TerminalEvent) {
        c.outside = true;
    }
    return c;
}

struct OriginCheck {
    ShotOutcome outcome;
    double f0 = 0.0;
    double slope = 0.0;
    bool positive() const { return std::holds_alternative<outcome::ReachedOrigin>(outcome) && f0 > 0.0; }
};

/// Backward shot from xi0; positive() iff the profile reaches the axis with f(0) > 0.
inline OriginCheck interface_origin_check(const Params& p, double xi0, const ShotConfig& cfg = {}) {
    ShotConfig lean = cfg;
    lean.sample_spacing = 0.0;
    const auto r = shoot_backward(p, xi0, lean);
    OriginCheck c{r.outcome};
    if (const auto* o = std::get_if<outcome::ReachedOrigin>(&r.outcome)) {
        c.f0 = o->f0;
        c.slope = o->slope;
    }
    return c;
}

/// Maximiser x0 = (m(m-1))^(-m/(m-1)) xi1^(-m sigma/(m-1)) of
/// phi(x) = x^(1/m)/(m-1) - xi1^sigma x.
inline double phi_extremum(const Params& p, double xi1) {
    if (!(xi1 > 0)) throw DomainError("phi_extremum: xi1 must be > 0");
    const double m = p.m();
    const double x0 = std::pow(m * (m - 1.0), -m / (m - 1.0)) * std::pow(xi1, -m * p.sigma() / (m - 1.0));
    const double w = weight(p, xi1);
    const double dphi = std::pow(x0, 1.0 / m - 1.0) / (m * (m - 1.0)) - w;
    if (std::abs(dphi) > 1e-12 * std::max(1.0, w)) {
        throw NumericalError("phi_extremum: phi'(x0) != 0");
    }
    return x0;
}

struct OrbitReport {
    PhaseState start;
    std::vector<double> eta;
    std::vector<PhaseState> states;
    std::vector<int> cylinder_signs;  // -1, 0, +1 per sample
    /// Label of the finite critical point the orbit ends near, or a
    /// divergence description ("X->+inf", "Y->-inf", ...), or "undetermined".
    std::string terminal;
    Termination reason = Termination::Completed;
};

/// Integrates from `start` and classifies where the orbit ends up.
inline OrbitReport orbit_report(const Params& p, const PhaseState& start, double eta_max,
                                const IntegratorConfig& cfg = {}, double escape_bound = 1e6) {
    const std::vector<Event<3>> ev{detail::escape_event(escape_bound)};
    Orbit o = integrate_main(p, start, eta_max, ev, cfg);
    OrbitReport r;
    r.start = start;
    r.reason = o.reason;
    for (const auto& s : o.states) {
        const double c = cylinder_value(p, s);
        r.cylinder_signs.push_back(std::abs(c) < kCylinderTol ? 0 : (c > 0 ? 1 : -1));
    }
    const PhaseState last = o.states.back();
    const double big = std::max({std::abs(last.X), std::abs(last.Y), std::abs(last.Z)});
    if (big >= 0.5 * escape_bound) {
        const double a[3] = {last.X, last.Y, last.Z};
        const char* names[3] = {"X", "Y", "Z"};
        int k = 0;
        for (int i = 1; i < 3; ++i) {
            if (std::abs(a[i]) > std::abs(a[k])) k = i;
        }
        r.terminal = std::string(names[k]) + (a[k] > 0 ? "->+inf" : "->-inf");
    } else {
        r.terminal = "undetermined";
        for (const auto& cp : critical_points(p)) {
            if (!cp.finite()) continue;
            const auto& q = cp.state();
            const double d = std::max({std::abs(last.X - q.X), std::abs(last.Y - q.Y), std::abs(last.Z - q.Z)});
            if (d < 1e-3) r.terminal = to_string(cp.label);
        }
    }
    r.eta = std::move(o.eta);
    r.states = std::move(o.states);
    return r;
}

/// cylinder_value at the first sample within max-norm distance `radius` of
/// P1 with Y < 0; nullopt if the orbit never gets there.
inline std::optional<double> p1_entry_cylinder_value(const Params& p, const OrbitReport& r, double radius = 0.05) {
    const PhaseState q = critical_point(p, PointLabel::P1).state();
    for (const auto& s : r.states) {
        const double d = std::max({std::abs(s.X - q.X), std::abs(s.Y - q.Y), std::abs(s.Z - q.Z)});
        if (d < radius && s.Y < 0.0) return cylinder_value(p, s);
    }
    return std::nullopt;
}

/// An orbit that arrives at P1: traced backward from P1 + delta v, with v in
/// the stable eigenspace spanned by (1, 0, 0) and (0, 1/(2 m h0), 1) at angle
/// theta, until it is `radius` away; the forward orbit from there is returned.
inline OrbitReport p1_incoming_orbit(const Params& p, double theta, double eta_max = 60.0, double delta = 1e-5,
                                     double radius = 0.2, const IntegratorConfig& cfg = {}) {
    const double m = p.m(), h0 = p.h0();
    const PhaseState s{delta * std::cos(theta), -h0 + delta * std::sin(theta) / (2.0 * m * h0),
                       delta * std::sin(theta)};
    std::vector<Event<3>> ev{detail::escape_event(1e3)};
    ev.push_back({EventKind::StateBound, Direction::Rising, true, [h0, radius](double, const Vec<3>& y) {
                      return std::max({std::abs(y[0]), std::abs(y[1] + h0), std::abs(y[2])}) - radius;
                  }});
    const Orbit back = integrate_main(p, s, -eta_max, ev, cfg);
    return orbit_report(p, back.states.back(), eta_max, cfg);
}

/// Gradient of cylinder_value at P2 dotted with the outgoing eigenvector:
/// sigma (m-1) h0/(2m).
inline double p2_exit_normal_flux(const Params& p) {
    const PhaseState q = critical_point(p, PointLabel::P2).state();
    const Vec<3> e = p2_unstable_eigenvector(p);
    return 2.0 * q.Y * e[1] + e[2] / p.m();
}

/// The orbit leaving P2, launched at P2 + delta e3/|e3| (e3 with Z > 0).
inline OrbitReport p2_outgoing_orbit(const Params& p, double eta_max, const IntegratorConfig& cfg = {},
                                     double delta = 1e-6) {
    Vec<3> e = p2_unstable_eigenvector(p);
    const double n = std::sqrt(e[0] * e[0] + e[1] * e[1] + e[2] * e[2]);
    const double sgn = e[2] > 0 ? 1.0 : -1.0;
    const PhaseState q = critical_point(p, PointLabel::P2).state();
    const PhaseState start{q.X + sgn * delta * e[0] / n, q.Y + sgn * delta * e[1] / n, q.Z + sgn * delta * e[2] / n};
    return orbit_report(p, start, eta_max, cfg);
}

// ---------------------------------------------------------------------------
// Monotonicity of forward shots

struct PairCheck {
    std::optional<double> first_intersection;
    std::optional<double> crossing1;  // first hyperbola_phi_max crossing of each shot
    std::optional<double> crossing2;
    bool ok = false;
};

/// Two forward shots ordered at the axis (shot 2 above shot 1) may only
/// intersect after both have crossed hyperbola_phi_max.
inline PairCheck monotone_pair_check(const Params& p, double a1, double s1, double a2, double s2, double xi_max,
                                     const ShotConfig& cfg = {}) {
    const bool ordered = (a2 > a1 && s1 == 0.0 && s2 == 0.0) || (a2 == a1 && s2 > s1 && s1 == 0.0);
    if (!ordered) throw DomainError("monotone_pair_check: need f2(0) > f1(0) or equal values with f2'(0) > 0");
    ShotConfig c = cfg;
    c.sample_spacing = std::min(cfg.sample_spacing > 0 ? cfg.sample_spacing : 1e-2, 1e-2);
    const auto r1 = shoot_forward(p, a1, xi_max, c, s1);
    const auto r2 = shoot_forward(p, a2, xi_max, c, s2);
    PairCheck out;
    if (!r1.profile.phi_max_crossings().empty()) out.crossing1 = r1.profile.phi_max_crossings().front();
    if (!r2.profile.phi_max_crossings().empty()) out.crossing2 = r2.profile.phi_max_crossings().front();

    const double end = std::min(r1.profile.xi_end(), r2.profile.xi_end());
    std::vector<double> grid;
    for (const auto& s : r1.profile.samples()) {
        if (s.xi > 0.0 && s.xi <= end) grid.push_back(s.xi);
    }
    for (const auto& s : r2.profile.samples()) {
        if (s.xi > 0.0 && s.xi <= end) grid.push_back(s.xi);
    }
    std::sort(grid.begin(), grid.end());
    for (double x : grid) {
        if (r2.profile.at(x).g - r1.profile.at(x).g <= 0.0) {
            out.first_intersection = x;
            break;
        }
    }
    if (!out.first_intersection) {
        out.ok = true;
    } else if (out.crossing1 && out.crossing2) {
        out.ok = *out.first_intersection >= std::max(*out.crossing1, *out.crossing2) - 1e-8;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Bounds behind the non-existence gap

/// [((m-1)/(2m)) sqrt((2m+1)/(m(m+1))) xi]^(2/(m-1)).
inline double p2_orbit_lower_bound(const Params& p, double xi) {
    const double m = p.m();
    const double k = (m - 1.0) / (2.0 * m) * std::sqrt((2.0 * m + 1.0) / (m * (m + 1.0)));
    return std::pow(k * xi, 2.0 / (m - 1.0));
}

/// [((m-1) h0/sigma) xi]^(2/(m-1)).
inline double backward_upper_bound(const Params& p, double xi) {
    const double m = p.m();
    return std::pow((m - 1.0) * p.h0() / p.sigma() * xi, 2.0 / (m - 1.0));
}

struct BoundCheck {
    std::optional<double> crossing;  // relevant hyperbola_phi_max crossing
    double limit = 0.0;              // xi_plus or xi_minus
    double worst_margin = std::numeric_limits<double>::infinity();  // min over samples of (bound slack)
    bool ok = false;
};

/// Along the P2 orbit, f stays above p2_orbit_lower_bound until the first
/// hyperbola_phi_max crossing, and that crossing lies at xi <= xi_plus.
inline BoundCheck p2_lower_bound_check(const Params& p, const ShotConfig& cfg = {}, double tol = 1e-8) {
    const auto gap = nonexistence_gap(p);
    ShotConfig c = cfg;
    c.sample_spacing = std::min(cfg.sample_spacing > 0 ? cfg.sample_spacing : 1e-3, 1e-3 * gap.xi_plus);
    const auto r = p2_orbit_profile(p, 4.0 * gap.xi_plus + 1.0, c, 1e-3 * gap.xi_plus);
    BoundCheck b;
    b.limit = gap.xi_plus;
    if (r.profile.phi_max_crossings().empty()) return b;
    b.crossing = r.profile.phi_max_crossings().front();
    for (const auto& s : r.profile.samples()) {
        if (s.xi > *b.crossing) break;
        const double L = p2_orbit_lower_bound(p, s.xi);
        b.worst_margin = std::min(b.worst_margin, f_from_g(p, std::max(s.g, 0.0)) - L + tol * (1.0 + L));
    }
    b.ok = b.worst_margin >= 0.0 && *b.crossing <= gap.xi_plus + tol;
    return b;
}

/// For the backward shot from xi0: at its last hyperbola_phi_max crossing c,
/// f(c) <= backward_upper_bound(c), and c >= xi_minus.
inline BoundCheck backward_bound_check(const Params& p, double xi0, const ShotConfig& cfg = {}, double tol = 1e-8) {
    const auto gap = nonexistence_gap(p);
    ShotConfig c = cfg;
    c.sample_spacing = 0.0;
    const auto r = shoot_backward(p, xi0, c);
    BoundCheck b;
    b.limit = gap.xi_minus;
    if (r.profile.phi_max_crossings().empty()) {
        // never above the curve: nothing to bound
        b.ok = true;
        return b;
    }
    b.crossing = r.profile.phi_max_crossings().back();
    const double U = backward_upper_bound(p, *b.crossing);
    b.worst_margin = U - f_from_g(p, std::max(r.profile.at(*b.crossing).g, 0.0)) + tol * (1.0 + U);
    b.ok = b.worst_margin >= 0.0 && *b.crossing >= gap.xi_minus - tol;
    return b;
}

}  // namespace blowup
