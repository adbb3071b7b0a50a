#pragma once

// Profile equation (f^m)'' - f/(m-1) + xi^sigma f^m = 0 written for g = f^m:
//
//     g'' = g^(1/m)/(m-1) - xi^sigma g.
//
// The explicit homogeneous profile, the two reference hyperbolas and the
// energy-type integral identity live here as well.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "blowup/params.hpp"

namespace blowup {

/// Roundoff band below zero inside which g is clamped to 0.
inline constexpr double kNegativeGClamp = 1e-14;

struct ProfileState {
    double xi;
    double g;   // f^m
    double dg;  // (f^m)'
};

/// f = g^(1/m), with the clamp rule for tiny negative g.
inline double f_from_g(const Params& p, double g) {
    if (g < 0.0) {
        if (g < -kNegativeGClamp) throw DomainError("f_from_g: negative g = " + std::to_string(g));
        return 0.0;
    }
    return std::pow(g, 1.0 / p.m());
}

/// f' recovered from (g, g'); infinite where g = 0 and g' != 0.
inline double fprime_from_g(const Params& p, double g, double dg) {
    if (g <= 0.0) {
        if (dg == 0.0) return 0.0;
        return dg > 0 ? INFINITY : -INFINITY;
    }
    return dg / (p.m() * std::pow(g, (p.m() - 1.0) / p.m()));
}

inline double weight(const Params& p, double xi) {
    return p.sigma() == 0.0 ? 1.0 : std::pow(xi, p.sigma());
}

/// g'' of the profile equation.
inline double rhs_g(const Params& p, double xi, double g) {
    if (xi < 0.0) throw DomainError("rhs_g: xi must be >= 0");
    if (g < 0.0) {
        if (g < -kNegativeGClamp) throw DomainError("rhs_g: negative g = " + std::to_string(g));
        g = 0.0;
    }
    return std::pow(g, 1.0 / p.m()) / (p.m() - 1.0) - weight(p, xi) * g;
}

/// rhs_g extended by g -> max(g, 0). Used inside integration steps that may
/// overshoot g = 0 before the GZero event truncates the trajectory.
inline double rhs_g_extended(const Params& p, double xi, double g) {
    const double gp = std::max(g, 0.0);
    const double w = p.sigma() == 0.0 ? 1.0 : std::pow(std::abs(xi), p.sigma());
    return std::pow(gp, 1.0 / p.m()) / (p.m() - 1.0) - w * g;
}

/// Maximum of the explicit sigma = 0 profile: [2m/((m+1)(m-1))]^(1/(m-1)).
inline double explicit_F0_amplitude(double m) {
    if (!(m > 1.0)) throw DomainError("explicit_F0_amplitude: m must be > 1");
    return std::pow(2.0 * m / ((m + 1.0) * (m - 1.0)), 1.0 / (m - 1.0));
}

/// Angular frequency k of the explicit profile F0 = A cos^(2/(m-1))(k xi).
///
/// k = (m-1)/(2m) is what makes F0 an exact solution of the profile equation
/// with unit diffusion coefficient; tests check this against rhs_g.
inline double explicit_F0_frequency(double m) { return (m - 1.0) / (2.0 * m); }

/// First zero of F0: pi m/(m-1).
inline double explicit_F0_interface(double m) {
    return std::numbers::pi / (2.0 * explicit_F0_frequency(m));
}

/// Explicit good profile with interface for sigma = 0.
inline double explicit_profile_F0(double m, double xi) {
    if (!(m > 1.0)) throw DomainError("explicit_profile_F0: m must be > 1");
    if (xi < 0.0) throw DomainError("explicit_profile_F0: xi must be >= 0");
    if (xi >= explicit_F0_interface(m)) return 0.0;
    const double c = std::cos(explicit_F0_frequency(m) * xi);
    return explicit_F0_amplitude(m) * std::pow(c * c, 1.0 / (m - 1.0));
}

inline double explicit_profile_F0_prime(double m, double xi) {
    if (xi < 0.0) throw DomainError("explicit_profile_F0_prime: xi must be >= 0");
    if (xi >= explicit_F0_interface(m)) return 0.0;
    const double k = explicit_F0_frequency(m);
    const double c = std::cos(k * xi);
    const double s = std::sin(k * xi);
    // d/dxi [A c^(2/(m-1))] = -A (2k/(m-1)) c^(2/(m-1)-1) s
    return -explicit_F0_amplitude(m) * (2.0 * k / (m - 1.0)) * std::pow(c, 2.0 / (m - 1.0) - 1.0) * s;
}

namespace detail {
inline void check_hyperbola_arg(const Params& p, double xi, const char* who) {
    if (xi < 0.0 || (xi == 0.0 && p.sigma() > 0.0)) {
        throw DomainError(std::string(who) + ": xi must be > 0 when sigma > 0");
    }
}
}  // namespace detail

/// (1/(m-1))^(1/(m-1)) xi^(-sigma/(m-1)); the curve where g'' changes sign.
inline double hyperbola_equilibrium(const Params& p, double xi) {
    detail::check_hyperbola_arg(p, xi, "hyperbola_equilibrium");
    const double m = p.m();
    const double base = std::pow(1.0 / (m - 1.0), 1.0 / (m - 1.0));
    return p.sigma() == 0.0 ? base : base * std::pow(xi, -p.sigma() / (m - 1.0));
}

/// (1/(m(m-1)))^(1/(m-1)) xi^(-sigma/(m-1)); the f-value where
/// x -> x^(1/m)/(m-1) - xi^sigma x peaks.
inline double hyperbola_phi_max(const Params& p, double xi) {
    detail::check_hyperbola_arg(p, xi, "hyperbola_phi_max");
    const double m = p.m();
    const double base = std::pow(1.0 / (m * (m - 1.0)), 1.0 / (m - 1.0));
    return p.sigma() == 0.0 ? base : base * std::pow(xi, -p.sigma() / (m - 1.0));
}

/// xi^sigma f^(m-1) - 1/(m(m-1)): zero exactly on hyperbola_phi_max, and
/// continuous at xi = 0. Negative below the curve.
inline double phi_max_indicator(const Params& p, double xi, double g) {
    const double m = p.m();
    const double f = std::pow(std::max(g, 0.0), 1.0 / m);
    return weight(p, xi) * std::pow(f, m - 1.0) - 1.0 / (m * (m - 1.0));
}

struct ForwardShot {
    double a;
};
struct BackwardShot {
    double xi0;
    double epsilon;
};
/// Samples that did not come from a shot (explicit formula, file input).
struct Tabulated {};

using Provenance = std::variant<ForwardShot, BackwardShot, Tabulated>;

/// A sampled profile in g-variables plus its annotations.
class Profile {
public:
    Profile(Params params, std::vector<ProfileState> samples, Provenance provenance)
        : params_(params), samples_(std::move(samples)), provenance_(provenance) {
        if (samples_.empty()) throw DomainError("Profile: no samples");
        for (std::size_t i = 1; i < samples_.size(); ++i) {
            if (!(samples_[i].xi > samples_[i - 1].xi)) {
                throw DomainError("Profile: xi must be strictly increasing");
            }
        }
    }

    const Params& params() const { return params_; }
    const std::vector<ProfileState>& samples() const { return samples_; }
    const Provenance& provenance() const { return provenance_; }
    const std::vector<double>& maxima() const { return maxima_; }
    const std::vector<double>& minima() const { return minima_; }
    std::optional<double> interface() const { return interface_; }
    std::optional<double> slope_at_origin() const { return slope_at_origin_; }

    double xi_begin() const { return samples_.front().xi; }
    double xi_end() const { return samples_.back().xi; }

    /// Records a local maximum of f at xi; it has to sit on or above the
    /// equilibrium hyperbola xi^sigma f^(m-1) >= 1/(m-1).
    void add_maximum(double xi, double g, double tol = 1e-8) {
        const double m = params_.m();
        const double lhs = weight(params_, xi) * std::pow(std::max(g, 0.0), (m - 1.0) / m);
        if (lhs < 1.0 / (m - 1.0) - tol) {
            throw NumericalError("Profile: local maximum below the equilibrium hyperbola at xi = " +
                                 std::to_string(xi));
        }
        maxima_.push_back(xi);
    }
    void add_minimum(double xi) { minima_.push_back(xi); }
    /// Crossings of hyperbola_phi_max, in increasing xi.
    const std::vector<double>& phi_max_crossings() const { return crossings_; }
    void add_phi_max_crossing(double xi) {
        crossings_.insert(std::upper_bound(crossings_.begin(), crossings_.end(), xi), xi);
    }
    void set_interface(double xi0) { interface_ = xi0; }
    void set_slope_at_origin(double s) { slope_at_origin_ = s; }

    /// Cubic Hermite interpolation of (g, g') at xi.
    ProfileState at(double xi) const {
        if (xi < xi_begin() || xi > xi_end()) throw DomainError("Profile::at: xi outside sampled range");
        auto it = std::lower_bound(samples_.begin(), samples_.end(), xi,
                                   [](const ProfileState& s, double x) { return s.xi < x; });
        if (it == samples_.begin()) return *it;
        if (it != samples_.end() && it->xi == xi) return *it;
        const ProfileState& b = *it;
        const ProfileState& a = *(it - 1);
        const double h = b.xi - a.xi;
        const double t = (xi - a.xi) / h;
        const double t2 = t * t;
        const double t3 = t2 * t;
        const double h00 = 2 * t3 - 3 * t2 + 1, h10 = t3 - 2 * t2 + t, h01 = -2 * t3 + 3 * t2, h11 = t3 - t2;
        const double g = h00 * a.g + h10 * h * a.dg + h01 * b.g + h11 * h * b.dg;
        const double d00 = (6 * t2 - 6 * t) / h, d10 = 3 * t2 - 4 * t + 1, d01 = (-6 * t2 + 6 * t) / h,
                     d11 = 3 * t2 - 2 * t;
        const double dg = d00 * a.g + d10 * a.dg + d01 * b.g + d11 * b.dg;
        return {xi, g, dg};
    }

private:
    Params params_;
    std::vector<ProfileState> samples_;
    Provenance provenance_;
    std::vector<double> maxima_;
    std::vector<double> minima_;
    std::vector<double> crossings_;
    std::optional<double> interface_;
    std::optional<double> slope_at_origin_;
};

namespace detail {

// int_{x0}^{x1} x^(s-1) g(x)^2 dx over one sample interval. g^2 is replaced by
// the quadratic through both ends and the Hermite midpoint. Near the origin the
// weight is integrated exactly against that quadratic; elsewhere plain Simpson.
inline double weighted_square_piece(double s, const ProfileState& a, const ProfileState& b) {
    const double h = b.xi - a.xi;
    const double xm = a.xi + 0.5 * h;
    const double gm = 0.5 * (a.g + b.g) + h * (a.dg - b.dg) / 8.0;
    const double v0 = a.g * a.g, vm = gm * gm, v1 = b.g * b.g;
    if (a.xi < 64.0 * h) {
        auto mom = [&](double k) { return (std::pow(b.xi, s + k) - std::pow(a.xi, s + k)) / (s + k); };
        const double M0 = mom(0), M1 = mom(1), M2 = mom(2);
        const double d1 = (vm - v0) / (xm - a.xi);
        const double d2 = ((v1 - vm) / (b.xi - xm) - d1) / (b.xi - a.xi);
        return v0 * M0 + d1 * (M1 - a.xi * M0) + d2 * (M2 - (a.xi + xm) * M1 + a.xi * xm * M0);
    }
    auto w = [&](double x, double v) { return std::pow(x, s - 1.0) * v; };
    return h / 6.0 * (w(a.xi, v0) + 4.0 * w(xm, vm) + w(b.xi, v1));
}

}  // namespace detail

/// |LHS - RHS| of the identity obtained by multiplying the g-equation by g'
/// and integrating from the first sample xi_a to xi0:
///
///   g'(xi0)^2 = g'(xi_a)^2 + 2m/((m+1)(m-1)) [g(xi0)^((m+1)/m) - g(xi_a)^((m+1)/m)]
///               - xi0^sigma g(xi0)^2 + xi_a^sigma g(xi_a)^2
///               + sigma int_{xi_a}^{xi0} xi^(sigma-1) g^2 dxi.
///
/// For profiles sampled from xi_a = 0 this is the usual form. The integral
/// runs over the stored samples; the singular weight at xi = 0 is integrated
/// exactly on the intervals next to the origin.
inline double integral_identity_residual(const Profile& profile, double xi0) {
    const auto& s = profile.samples();
    if (xi0 < profile.xi_begin() || xi0 > profile.xi_end()) {
        throw DomainError("integral_identity_residual: xi0 outside sampled range");
    }
    const Params& p = profile.params();
    const double m = p.m();
    const double sigma = p.sigma();
    const ProfileState a = s.front();
    const ProfileState b = profile.at(xi0);
    auto gpow = [&](double g) { return std::pow(std::max(g, 0.0), (m + 1.0) / m); };

    double integral = 0.0;
    if (sigma != 0.0 && xi0 > a.xi) {
        ProfileState prev = a;
        for (std::size_t i = 1; i < s.size() && s[i].xi <= xi0; ++i) {
            integral += detail::weighted_square_piece(sigma, prev, s[i]);
            prev = s[i];
        }
        if (xi0 > prev.xi) integral += detail::weighted_square_piece(sigma, prev, b);
    }
    const double lhs = b.dg * b.dg;
    const double rhs = a.dg * a.dg + 2.0 * m / ((m + 1.0) * (m - 1.0)) * (gpow(b.g) - gpow(a.g)) -
                       weight(p, b.xi) * b.g * b.g + weight(p, a.xi) * a.g * a.g + sigma * integral;
    return std::abs(lhs - rhs);
}

}  // namespace blowup
