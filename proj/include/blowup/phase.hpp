#pragma once

// Quadratic autonomous systems equivalent to the profile equation.
//
// Main system, (X, Y, Z) with X = sqrt(m(m-1)) f^((m-1)/2)/xi,
// Y = (2 sqrt(m(m-1))/(m-1)) (f^((m-1)/2))', Z = (m-1) xi^sigma f^(m-1):
//
//     X' = (m-1)/2 XY - X^2
//     Y' = -(m+1)/2 Y^2 + 1 - Z
//     Z' = Z((m-1)Y + sigma X)
//
// Alternative system, x = f^(m-1), y = f^(m-2) f', z = xi:
//
//     x' = m(m-1)xy,  y' = -my^2 + x/(m-1) - z^sigma x^2,  z' = mx.

#include <Eigen/Dense>
#include <array>
#include <cmath>
#include <complex>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "blowup/integrate.hpp"
#include "blowup/model.hpp"
#include "blowup/params.hpp"

namespace blowup {

struct PhaseState {
    double X;
    double Y;
    double Z;

    Vec<3> vec() const { return {X, Y, Z}; }
    static PhaseState from(const Vec<3>& v) { return {v[0], v[1], v[2]}; }
};

struct AltPhaseState {
    double x;
    double y;
    double z;
};

/// Right-hand side of the main system for any scalar type (double, complex).
template <class T>
std::array<T, 3> vf_main(const Params& p, const T& X, const T& Y, const T& Z) {
    const double m = p.m();
    return {T((m - 1.0) / 2.0) * X * Y - X * X, T(-(m + 1.0) / 2.0) * Y * Y + T(1.0) - Z,
            Z * (T(m - 1.0) * Y + T(p.sigma()) * X)};
}

inline Vec<3> vf_main(const Params& p, const PhaseState& s) {
    const auto r = vf_main<double>(p, s.X, s.Y, s.Z);
    return {r[0], r[1], r[2]};
}

inline Vec<3> vf_alt(const Params& p, const AltPhaseState& s) {
    const double m = p.m();
    const double zs = p.sigma() == 0.0 ? 1.0 : std::pow(std::max(s.z, 0.0), p.sigma());
    return {m * (m - 1.0) * s.x * s.y, -m * s.y * s.y + s.x / (m - 1.0) - zs * s.x * s.x, m * s.x};
}

/// Maps a profile point (xi, f, f') into the main system.
inline PhaseState to_phase(const Params& p, double xi, double f, double fprime) {
    if (!(xi > 0.0) || !(f > 0.0)) throw DomainError("to_phase: need xi > 0 and f > 0");
    const double m = p.m();
    const double c = std::sqrt(m * (m - 1.0));
    return {c * std::pow(f, (m - 1.0) / 2.0) / xi, c * std::pow(f, (m - 3.0) / 2.0) * fprime,
            (m - 1.0) * weight(p, xi) * std::pow(f, m - 1.0)};
}

/// Same map expressed through g = f^m and g'.
inline PhaseState to_phase_from_g(const Params& p, double xi, double g, double dg) {
    if (!(g > 0.0)) throw DomainError("to_phase_from_g: need g > 0");
    const double m = p.m();
    const double f = std::pow(g, 1.0 / m);
    return to_phase(p, xi, f, dg / (m * std::pow(g, (m - 1.0) / m)));
}

using Matrix3 = Eigen::Matrix3d;

inline Matrix3 jacobian_main(const Params& p, const PhaseState& s) {
    const double m = p.m();
    const double sg = p.sigma();
    Matrix3 J;
    J << (m - 1.0) / 2.0 * s.Y - 2.0 * s.X, (m - 1.0) / 2.0 * s.X, 0.0,  //
        0.0, -(m + 1.0) * s.Y, -1.0,                                    //
        sg * s.Z, (m - 1.0) * s.Z, (m - 1.0) * s.Y + sg * s.X;
    return J;
}

/// Eigenvalues of a 3x3 real matrix, sorted by (real, imag).
inline std::vector<std::complex<double>> eigenvalues(const Matrix3& M) {
    Eigen::EigenSolver<Matrix3> es(M, false);
    std::vector<std::complex<double>> ev(es.eigenvalues().data(), es.eigenvalues().data() + 3);
    std::sort(ev.begin(), ev.end(), [](auto a, auto b) {
        return a.real() != b.real() ? a.real() < b.real() : a.imag() < b.imag();
    });
    return ev;
}

// ---------------------------------------------------------------------------
// Critical points

enum class PointLabel { P0, P1, P2, P3, Q1, Q2, Q3, Q4, Q5 };
enum class PointKind { Saddle2u1s, Saddle1u2s, Nonhyperbolic, UnstableNode, StableNode };
enum class Expansion { None, BehP0, BehP1, BehP2, Q1Regular, Q2Vertical, Q3Vertical, Q5Power };

inline const char* to_string(PointLabel l) {
    constexpr const char* names[] = {"P0", "P1", "P2", "P3", "Q1", "Q2", "Q3", "Q4", "Q5"};
    return names[static_cast<int>(l)];
}
inline const char* to_string(PointKind k) {
    constexpr const char* names[] = {"saddle-2u1s", "saddle-1u2s", "nonhyperbolic", "unstable-node",
                                     "stable-node"};
    return names[static_cast<int>(k)];
}
inline const char* to_string(Expansion e) {
    constexpr const char* names[] = {"none",      "behP0",       "behP1",       "behP2",
                                     "Q1-regular", "Q2-vertical", "Q3-vertical", "Q5-power"};
    return names[static_cast<int>(e)];
}

/// Direction (Xbar, Ybar, Zbar, 0) on the equator of the Poincare sphere.
struct InfinityDirection {
    std::array<double, 4> v;
};

struct CriticalPoint {
    PointLabel label;
    std::variant<PhaseState, InfinityDirection> coords;
    std::vector<std::complex<double>> eigenvalues;
    std::vector<Vec<3>> eigenvectors;
    PointKind kind;
    Expansion expansion;

    bool finite() const { return std::holds_alternative<PhaseState>(coords); }
    const PhaseState& state() const { return std::get<PhaseState>(coords); }
};

/// Outgoing eigenvector at P2 for the positive eigenvalue (m-1)(sigma+2)h0/2.
inline Vec<3> p2_unstable_eigenvector(const Params& p) {
    const double m = p.m();
    const double s = p.sigma();
    return {-(m - 1.0) / (2.0 * (s + 3.0)), -1.0, (s * (m - 1.0) + 4.0 * m) * p.h0() / 2.0};
}

/// All nine critical points with closed-form eigen-data.
///
/// Finite points carry eigenvalues of the main system's linearization. The
/// points at infinity carry eigenvalues of the chart system that describes the
/// flow near them; they are catalog entries and are never integrated.
inline std::vector<CriticalPoint> critical_points(const Params& p) {
    using cd = std::complex<double>;
    const double m = p.m();
    const double s = p.sigma();
    const double h0 = p.h0();
    const double w = std::sqrt(m - 1.0);
    const double q5n = std::sqrt(1.0 + m * m);

    std::vector<CriticalPoint> pts;
    pts.push_back({PointLabel::P0,
                   PhaseState{0.0, h0, 0.0},
                   {cd((m - 1.0) * h0 / 2.0), cd(-(m + 1.0) * h0), cd((m - 1.0) * h0)},
                   {},
                   PointKind::Saddle2u1s,
                   Expansion::BehP0});
    pts.push_back({PointLabel::P1,
                   PhaseState{0.0, -h0, 0.0},
                   {cd(-(m - 1.0) * h0 / 2.0), cd((m + 1.0) * h0), cd(-(m - 1.0) * h0)},
                   {},
                   PointKind::Saddle1u2s,
                   Expansion::BehP1});
    pts.push_back({PointLabel::P2,
                   PhaseState{(m - 1.0) * h0 / 2.0, h0, 0.0},
                   {cd(-(m - 1.0) * h0 / 2.0), cd(-(m + 1.0) * h0), cd((m - 1.0) * (s + 2.0) * h0 / 2.0)},
                   {p2_unstable_eigenvector(p)},
                   PointKind::Saddle1u2s,
                   Expansion::BehP2});
    pts.push_back({PointLabel::P3,
                   PhaseState{0.0, 0.0, 1.0},
                   {cd(0.0), cd(0.0, w), cd(0.0, -w)},
                   {},
                   PointKind::Nonhyperbolic,
                   Expansion::None});
    pts.push_back({PointLabel::Q1,
                   InfinityDirection{{1.0, 0.0, 0.0, 0.0}},
                   {cd(1.0), cd(s + 1.0), cd(1.0)},
                   {},
                   PointKind::UnstableNode,
                   Expansion::Q1Regular});
    pts.push_back({PointLabel::Q2,
                   InfinityDirection{{0.0, 1.0, 0.0, 0.0}},
                   {cd(m), cd((3.0 * m - 1.0) / 2.0), cd((m + 1.0) / 2.0)},
                   {},
                   PointKind::UnstableNode,
                   Expansion::Q2Vertical});
    pts.push_back({PointLabel::Q3,
                   InfinityDirection{{0.0, -1.0, 0.0, 0.0}},
                   {cd(-m), cd(-(3.0 * m - 1.0) / 2.0), cd(-(m + 1.0) / 2.0)},
                   {},
                   PointKind::StableNode,
                   Expansion::Q3Vertical});
    // Q4 is non-hyperbolic; no orbit from the finite part enters it.
    pts.push_back({PointLabel::Q4,
                   InfinityDirection{{0.0, 0.0, 1.0, 0.0}},
                   {},
                   {},
                   PointKind::Nonhyperbolic,
                   Expansion::None});
    pts.push_back({PointLabel::Q5,
                   InfinityDirection{{m / q5n, 1.0 / q5n, 0.0, 0.0}},
                   {cd(-1.0), cd((2.0 * m * (s + 1.0) + m - 1.0) / (2.0 * m)), cd((m + 1.0) / (2.0 * m))},
                   {},
                   PointKind::Saddle2u1s,
                   Expansion::Q5Power});
    return pts;
}

inline CriticalPoint critical_point(const Params& p, PointLabel label) {
    for (auto& c : critical_points(p)) {
        if (c.label == label) return c;
    }
    throw DomainError("critical_point: unknown label");
}

// ---------------------------------------------------------------------------
// Cylinder Y^2 = 2/(m+1) - Z/m

/// Y^2 - 2/(m+1) + Z/m; negative strictly inside the cylinder.
inline double cylinder_value(const Params& p, const PhaseState& s) {
    return s.Y * s.Y - 2.0 / (p.m() + 1.0) + s.Z / p.m();
}

/// Normal flow -(m+1)Y^3 + 2Y - 2YZ + ((m-1)/m)YZ + (sigma/m)XZ, unsimplified.
inline double cylinder_normal_flow(const Params& p, const PhaseState& s) {
    const double m = p.m();
    const double Y = s.Y;
    const double Z = s.Z;
    return -(m + 1.0) * Y * Y * Y + 2.0 * Y - 2.0 * Y * Z + (m - 1.0) / m * Y * Z + p.sigma() / m * s.X * Z;
}

/// Flow across the cylinder at an on-cylinder point: sigma X Z/m.
///
/// The unsimplified normal flow is evaluated with Z replaced by its cylinder
/// value 2m/(m+1) - mY^2 and must agree with the simplified form.
inline double cylinder_flux(const Params& p, const PhaseState& s) {
    if (std::abs(cylinder_value(p, s)) >= 1e-10) {
        throw DomainError("cylinder_flux: state is not on the cylinder");
    }
    const double m = p.m();
    const double simplified = p.sigma() * s.X * s.Z / m;
    const PhaseState proj{s.X, s.Y, 2.0 * m / (m + 1.0) - m * s.Y * s.Y};
    const double full = cylinder_normal_flow(p, proj);
    const double proj_simplified = p.sigma() * proj.X * proj.Z / m;
    const double scale = 1.0 + std::abs(proj.Y * proj.Y * proj.Y) * (m + 1.0) + std::abs(proj_simplified);
    if (std::abs(full - proj_simplified) > 1e-12 * scale) {
        throw NumericalError("cylinder_flux: simplified and unsimplified forms disagree");
    }
    return simplified;
}

/// First integral of the X = 0 subsystem:
/// K = Z^((m+1)/(m-1)) [Y^2 + ((m+1)Z - 2m)/(m(m+1))]. Zero on the cylinder.
inline double x0_first_integral(const Params& p, double Y, double Z) {
    const double m = p.m();
    return std::pow(Z, (m + 1.0) / (m - 1.0)) * (Y * Y + ((m + 1.0) * Z - 2.0 * m) / (m * (m + 1.0)));
}

// ---------------------------------------------------------------------------
// Normal form at P3
//
// With v = (m-1)Y + sigma X, u = sqrt(m-1)(Z-1), z = X and w = v + iu the
// system becomes z' = g(z,w,wbar), w' = i sqrt(m-1) w + h(z,w,wbar). The
// Taylor coefficients g_jkl, h_jkl multiply z^j w^k wbar^l/(j!k!l!).

struct TaylorCoeffs {
    using cd = std::complex<double>;
    // quadratic
    cd g200, g110, g101, g020, g002, g011;
    cd h200, h110, h101, h020, h002, h011;
    // cubic (identically zero for a quadratic field, kept for the generic formulas)
    cd g300{}, g111{}, h210{}, h021{};
};

struct NormalFormCoeffs {
    double G200;
    double G011;
    double G111;
    double G300;
    double H110;
    std::complex<double> H210;
    std::complex<double> H021;
};

/// Closed-form Taylor coefficients at P3.
inline TaylorCoeffs taylor_coefficients_p3(const Params& p) {
    const double m = p.m();
    const double s = p.sigma();
    const double A = (m + 1.0) / (4.0 * (m - 1.0));
    TaylorCoeffs t{};
    t.g200 = -(s + 2.0);
    t.g110 = 0.25;
    t.g101 = 0.25;
    t.g020 = 0.0;
    t.g002 = 0.0;
    t.g011 = 0.0;
    t.h200 = -2.0 * s * (m * s + m - 1.0) / (m - 1.0);
    t.h020 = 0.5 - A;
    t.h002 = -(0.5 + A);
    t.h110 = (3.0 * m + 1.0) * s / (4.0 * (m - 1.0));
    t.h101 = t.h110;
    t.h011 = -A;
    return t;
}

/// Taylor coefficients obtained directly from vf_main: the field is rewritten
/// in (z, w, wbar) with w and wbar treated as independent complex variables
/// and second derivatives are read off by exact polarization of the quadratic.
inline TaylorCoeffs taylor_coefficients_from_field(const Params& p) {
    using cd = std::complex<double>;
    const double m = p.m();
    const double s = p.sigma();
    const double om = std::sqrt(m - 1.0);
    // returns (z', w') as functions of (z, w, wb)
    auto field = [&](cd z, cd w, cd wb) {
        const cd v = (w + wb) / 2.0;
        const cd u = (w - wb) / cd(0.0, 2.0);
        const cd X = z;
        const cd Y = (v - s * z) / (m - 1.0);
        const cd Z = 1.0 + u / om;
        const auto d = vf_main<cd>(p, X, Y, Z);
        const cd dv = (m - 1.0) * d[1] + s * d[0];
        const cd du = om * d[2];
        return std::array<cd, 2>{d[0], dv + cd(0.0, 1.0) * du};
    };
    // strip the linear part: q(x) = field(x) - J x
    auto quad = [&](std::array<cd, 3> x) {
        auto f = field(x[0], x[1], x[2]);
        f[1] -= cd(0.0, om) * x[1];
        return f;
    };
    auto e = [](int i) {
        std::array<cd, 3> v{};
        v[i] = 1.0;
        return v;
    };
    auto add = [](std::array<cd, 3> a, std::array<cd, 3> b) {
        for (int i = 0; i < 3; ++i) a[i] += b[i];
        return a;
    };
    auto neg = [](std::array<cd, 3> a) {
        for (auto& x : a) x = -x;
        return a;
    };
    // d2q/dxi^2 = q(e) + q(-e) - 2q(0); mixed: q(ei+ej) - q(ei) - q(ej) + q(0).
    auto second = [&](int i, int j, int comp) {
        const cd q0 = quad({})[comp];
        if (i == j) return quad(e(i))[comp] + quad(neg(e(i)))[comp] - 2.0 * q0;
        return quad(add(e(i), e(j)))[comp] - quad(e(i))[comp] - quad(e(j))[comp] + q0;
    };
    TaylorCoeffs t{};
    t.g200 = second(0, 0, 0);
    t.g110 = second(0, 1, 0);
    t.g101 = second(0, 2, 0);
    t.g020 = second(1, 1, 0);
    t.g002 = second(2, 2, 0);
    t.g011 = second(1, 2, 0);
    t.h200 = second(0, 0, 1);
    t.h110 = second(0, 1, 1);
    t.h101 = second(0, 2, 1);
    t.h020 = second(1, 1, 1);
    t.h002 = second(2, 2, 1);
    t.h011 = second(1, 2, 1);
    return t;
}

/// Fold-Hopf normal-form coefficients from Taylor coefficients (generic formulas).
inline NormalFormCoeffs normal_form_from_taylor(const TaylorCoeffs& t, double omega) {
    using cd = std::complex<double>;
    const cd pref = cd(0.0, 1.0) / (2.0 * omega);
    NormalFormCoeffs n{};
    n.G200 = t.g200.real();
    n.G011 = t.g011.real();
    // Imaginary-part corrections; they vanish when the quadratic coefficients are real.
    n.G300 = (t.g300 - 6.0 / omega * cd(std::imag(t.g110 * t.h200))).real();
    n.G111 =
        (t.g111 - 1.0 / omega * cd(2.0 * std::imag(t.g110 * t.h101) + std::imag(t.g020 * std::conj(t.h011))))
            .real();
    n.H110 = t.h110.real();
    n.H210 = t.h210 + pref * (t.h200 * (t.h020 - 2.0 * t.g110) - std::norm(t.h101) - t.h011 * std::conj(t.h200));
    n.H021 = t.h021 + pref * (t.h011 * t.h020 - 0.5 * t.g020 * t.h101 - 2.0 * std::norm(t.h011) -
                              std::norm(t.h002) / 3.0);
    return n;
}

/// Closed-form normal-form coefficients at P3, cross-checked against the
/// generic formulas evaluated on the closed-form Taylor coefficients.
inline NormalFormCoeffs normal_form_p3(const Params& p) {
    if (!(p.sigma() > 0.0)) throw DomainError("normal_form_p3: sigma must be > 0");
    using cd = std::complex<double>;
    const double m = p.m();
    const double s = p.sigma();
    const double om = std::sqrt(m - 1.0);
    const cd pref = cd(0.0, 1.0) / (2.0 * om);
    NormalFormCoeffs c{};
    c.G200 = -(s + 2.0);
    c.G011 = 0.0;
    c.G111 = 0.0;
    c.G300 = 0.0;
    c.H110 = (3.0 * m + 1.0) * s / (4.0 * (m - 1.0));
    c.H210 = -pref * ((3.0 * m + 1.0) * (3.0 * m + 1.0) * s * s / (16.0 * (m - 1.0) * (m - 1.0)));
    c.H021 = pref * (-(m + 1.0) * (m + 1.0) / (12.0 * (m - 1.0) * (m - 1.0)) - 5.0 * (m + 1.0) / (24.0 * (m - 1.0)) -
                     1.0 / 12.0);

    const NormalFormCoeffs g = normal_form_from_taylor(taylor_coefficients_p3(p), om);
    auto close = [](cd a, cd b) { return std::abs(a - b) <= 1e-12 * std::max(1.0, std::abs(a)); };
    if (!close(c.G200, g.G200) || !close(c.G011, g.G011) || !close(c.G111, g.G111) || !close(c.G300, g.G300) ||
        !close(c.H110, g.H110) || !close(c.H210, g.H210) || !close(c.H021, g.H021)) {
        throw NumericalError("normal_form_p3: closed forms disagree with the generic formulas");
    }
    return c;
}

// ---------------------------------------------------------------------------
// Orbits of the main system

struct Orbit {
    std::vector<double> eta;
    std::vector<PhaseState> states;
    std::vector<EventRecord<3>> events;
    Termination reason;
};

/// Integrates the main system from `start` over [0, eta_max] (eta_max may be negative).
inline Orbit integrate_main(const Params& p, const PhaseState& start, double eta_max,
                            std::span<const Event<3>> events, const IntegratorConfig& cfg) {
    auto rhs = [&p](double, const Vec<3>& y) { return vf_main(p, PhaseState::from(y)); };
    auto tr = integrate<3>(rhs, start.vec(), 0.0, eta_max, events, cfg);
    Orbit o;
    o.eta = std::move(tr.t);
    o.states.reserve(tr.y.size());
    for (auto& v : tr.y) o.states.push_back(PhaseState::from(v));
    o.events = std::move(tr.events);
    o.reason = tr.reason;
    return o;
}

struct SpiralReport {
    /// |Z - 1| at successive crossings of the half-plane {Y = 0, Z > 1}.
    std::vector<double> radii;
    std::vector<double> eta;
    bool escaped = false;             // left through Y -> -infinity
    PhaseState final_state{};
    Termination reason = Termination::Completed;

    bool strictly_increasing() const {
        for (std::size_t i = 1; i < radii.size(); ++i) {
            if (!(radii[i] > radii[i - 1])) return false;
        }
        return true;
    }
};

/// Section distances of an orbit started near P3.
///
/// Stops after `turns` returns, when Y drops below -escape_bound (the Q3
/// direction), or at eta_max.
inline SpiralReport p3_spiral_diagnostic(const Params& p, const PhaseState& start, int turns,
                                         const IntegratorConfig& cfg = {}, double eta_max = 1e4,
                                         double escape_bound = 50.0) {
    if (turns < 2) throw DomainError("p3_spiral_diagnostic: turns must be >= 2");
    if (start.X < 0.0 || start.Z < 0.0) throw DomainError("p3_spiral_diagnostic: need X >= 0, Z >= 0");
    SpiralReport rep;
    auto count = std::make_shared<int>(0);
    std::vector<Event<3>> ev;
    ev.push_back({EventKind::CylinderCross, Direction::Falling, false,
                  [](double, const Vec<3>& y) { return y[1]; },
                  [count, turns](double, const Vec<3>& y) {
                      if (y[2] > 1.0) ++*count;
                      return *count >= turns;
                  }});
    ev.push_back({EventKind::StateBound, Direction::Falling, true,
                  [escape_bound](double, const Vec<3>& y) { return y[1] + escape_bound; }});
    const Orbit o = integrate_main(p, start, eta_max, ev, cfg);
    for (const auto& r : o.events) {
        if (r.index == 0 && r.state[2] > 1.0) {
            rep.radii.push_back(std::abs(r.state[2] - 1.0));
            rep.eta.push_back(r.location);
        }
        if (r.index == 1) rep.escaped = true;
    }
    rep.final_state = o.states.back();
    rep.reason = o.reason;
    if (!(o.reason == Termination::Completed || o.reason == Termination::TerminalEvent)) {
        throw NumericalError(std::string("p3_spiral_diagnostic: integration failed: ") + to_string(o.reason));
    }
    return rep;
}

}  // namespace blowup
