#pragma once

// Acceptance checks. Each check reports pass/fail plus the measured values, so
// a failing line says what was actually computed.

#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "blowup/analysis.hpp"
#include "blowup/phase.hpp"
#include "blowup/shooting.hpp"

namespace blowup::verify {

struct CheckResult {
    int id;
    std::string name;
    bool pass = false;
    std::string detail;
    double seconds = 0.0;
};

/// Profiles produced by checks 1-5, re-examined by check 10.
struct Context {
    std::uint64_t seed = 0;
    std::vector<std::pair<std::string, Profile>> profiles;
};

namespace detail {

inline std::string fmt(const char* f, double a) {
    char b[64];
    std::snprintf(b, sizeof b, f, a);
    return b;
}

inline std::string num(double x) { return fmt("%.10g", x); }

inline double end_point(const Profile& p) { return p.xi_end(); }

inline void keep(Context& ctx, std::string label, const Profile& p) { ctx.profiles.emplace_back(std::move(label), p); }

}  // namespace detail

// 1. sigma = 0 regression against the interface pi sqrt(2).
inline CheckResult check_sigma0_regression(Context& ctx) {
    using detail::num;
    CheckResult r{1, "sigma=0 regression: forward a=4/3 -> interface pi*sqrt(2); backward from pi*sqrt(2) -> f(0)=4/3, f'(0)=0", false, {}, 0.0};
    const Params p(2.0, 0.0);
    const double target = std::numbers::pi * std::sqrt(2.0);
    const auto fw = shoot_forward(p, 4.0 / 3.0, 1e3);
    detail::keep(ctx, "forward a=4/3 sigma=0", fw.profile);
    const auto* in = std::get_if<outcome::Interface>(&fw.outcome);
    const bool fw_ok = in && std::abs(in->xi0 - target) <= 1e-5;
    const auto bw = shoot_backward(p, target);
    detail::keep(ctx, "backward xi0=pi*sqrt(2) sigma=0", bw.profile);
    const auto* ro = std::get_if<outcome::ReachedOrigin>(&bw.outcome);
    const bool bw_ok = ro && std::abs(ro->f0 - 4.0 / 3.0) <= 1e-4 && std::abs(ro->slope) <= 1e-4;
    r.pass = fw_ok && bw_ok;
    r.detail = "forward: " + describe(fw.outcome) + " (target " + num(target) + ", explicit-profile zero " +
               num(explicit_F0_interface(2.0)) + "); backward: " + describe(bw.outcome);
    return r;
}

// 2. Two good profiles near 11.1 and 12.83 at sigma = 0.1.
inline CheckResult check_multiplicity(Context& ctx) {
    using detail::num;
    CheckResult r{2, "multiplicity sigma=0.1: slope signs (-,+,-) at xi0=10,12,14; good profiles at 11.1 and 12.83 (+-0.3) in [8,16]", false, {}, 0.0};
    const Params p(2.0, 0.1);
    std::string signs;
    bool pattern = true;
    const double xs[3] = {10.0, 12.0, 14.0};
    const int want[3] = {-1, 1, -1};
    for (int i = 0; i < 3; ++i) {
        const auto e = try_slope(p, xs[i]);
        const auto bw = shoot_backward(p, xs[i]);
        detail::keep(ctx, "backward sigma=0.1 xi0=" + num(xs[i]), bw.profile);
        const int s = !e.reliable ? 0 : (e.slope > 0 ? 1 : -1);
        pattern = pattern && s == want[i];
        signs += (s > 0 ? "+" : (s < 0 ? "-" : "?"));
        signs += "(" + num(e.slope) + ") ";
    }
    const auto found = find_good_profiles(p, 8.0, 16.0, 33);
    std::string roots;
    bool near1 = false, near2 = false;
    for (const auto& g : found.profiles) {
        detail::keep(ctx, "good profile sigma=0.1 xi0=" + num(g.xi0), g.profile);
        roots += num(g.xi0) + "(n_max=" + std::to_string(g.n_max) + ") ";
        near1 = near1 || std::abs(g.xi0 - 11.1) <= 0.3;
        near2 = near2 || std::abs(g.xi0 - 12.83) <= 0.3;
    }
    r.pass = pattern && found.profiles.size() == 2 && near1 && near2;
    r.detail = "slopes at 10,12,14: " + signs + "| good profiles in [8,16]: " +
               (roots.empty() ? std::string("none ") : roots) + "(" + std::to_string(found.profiles.size()) + " found)";
    return r;
}

// 3. At least three good profiles with different numbers of maxima in (0, 80].
inline CheckResult check_extended_multiplicity(Context& ctx, int grid_n = 321) {
    CheckResult r{3, "extended multiplicity sigma=0.1: >= 3 good profiles with pairwise distinct n_max in (0,80]", false, {}, 0.0};
    const auto rows = multiplicity_scan(2.0, {0.1}, 80.0, grid_n);
    const auto& row = rows.front();
    std::vector<int> distinct;
    std::string list;
    for (std::size_t i = 0; i < row.count(); ++i) {
        detail::keep(ctx, "scan sigma=0.1 xi0=" + detail::num(row.xi0[i]), row.profiles[i].profile);
        if (std::find(distinct.begin(), distinct.end(), row.n_max[i]) == distinct.end()) distinct.push_back(row.n_max[i]);
        list += detail::fmt("%.4f", row.xi0[i]) + ":" + std::to_string(row.n_max[i]) + " ";
    }
    r.pass = row.error.empty() && distinct.size() >= 3;
    r.detail = std::to_string(row.count()) + " good profiles, " + std::to_string(distinct.size()) +
               " distinct n_max; xi0:n_max = " + list + (row.error.empty() ? "" : "error: " + row.error);
    return r;
}

// 4. Non-existence gap at sigma = 4.
inline CheckResult check_nonexistence(Context& ctx) {
    using detail::num;
    CheckResult r{4, "non-existence sigma=4: xi_plus=(48/5)^(1/6) < xi_minus=12^(1/6); no sign change over (0,20] (grid 201); gap identity on 100 (m,sigma)", false, {}, 0.0};
    const Params p(2.0, 4.0);
    const auto g = nonexistence_gap(p);
    const bool values = std::abs(g.xi_plus - std::pow(48.0 / 5.0, 1.0 / 6.0)) <= 1e-12 &&
                        std::abs(g.xi_minus - std::pow(12.0, 1.0 / 6.0)) <= 1e-12 && g.gap;
    int negative = 0, failed = 0;
    double worst = -INFINITY;
    for (int k = 1; k <= 201; ++k) {
        const double xi0 = 20.0 * k / 201.0;
        const auto e = try_slope(p, xi0);
        if (!e.reliable) {
            ++failed;
            continue;
        }
        if (e.slope < 0) ++negative;
        worst = std::max(worst, e.slope);
        const auto bw = shoot_backward(p, xi0);
        detail::keep(ctx, "backward sigma=4 xi0=" + num(xi0), bw.profile);
    }
    int agree = 0;
    for (int i = 0; i < 10; ++i) {
        for (int j = 0; j < 10; ++j) {
            const double m = 1.1 + 0.43 * i;
            const double s = 0.05 + 1.07 * j;
            const auto q = nonexistence_gap(Params(m, s));
            if (q.gap == (s * s > 8.0 * m * m * m / (2.0 * m + 1.0))) ++agree;
        }
    }
    r.pass = values && negative == 201 && failed == 0 && agree == 100;
    r.detail = "xi_plus=" + num(g.xi_plus) + " xi_minus=" + num(g.xi_minus) + "; negative slopes " +
               std::to_string(negative) + "/201 (failed " + std::to_string(failed) + ", max slope " + num(worst) +
               "); identity agrees on " + std::to_string(agree) + "/100";
    return r;
}

// 5. Negative slope at the axis for sigma = 0.5.
inline CheckResult check_negative_slope(Context& ctx) {
    CheckResult r{5, "negative slope sigma=0.5: backward shots from xi0=1,2,3,4 reach the axis with f'(0)<0", false, {}, 0.0};
    const Params p(2.0, 0.5);
    bool ok = true;
    for (double xi0 : {1.0, 2.0, 3.0, 4.0}) {
        const auto bw = shoot_backward(p, xi0);
        detail::keep(ctx, "backward sigma=0.5 xi0=" + detail::num(xi0), bw.profile);
        const auto* ro = std::get_if<outcome::ReachedOrigin>(&bw.outcome);
        ok = ok && ro && ro->slope < 0;
        r.detail += detail::num(xi0) + ": " + describe(bw.outcome) + "; ";
    }
    r.pass = ok;
    return r;
}

// 6. Eigenvalues at P0, P1, P2 and P3.
inline CheckResult check_catalog(Context& ctx) {
    CheckResult r{6, "critical points: Jacobian eigenvalues at P0,P1,P2 match closed forms (1e-10) for 50 random (m,sigma); P3 = {0, +-i sqrt(m-1)} (1e-12)", false, {}, 0.0};
    std::mt19937_64 rng(ctx.seed + 6);
    std::uniform_real_distribution<double> um(1.05, 6.0), us(0.0, 6.0);
    double worst = 0.0, worst3 = 0.0;
    for (int k = 0; k < 50; ++k) {
        const Params p(um(rng), us(rng));
        for (const auto& cp : critical_points(p)) {
            if (!cp.finite()) continue;
            auto num = eigenvalues(jacobian_main(p, cp.state()));
            auto ref = cp.eigenvalues;
            auto less = [](std::complex<double> a, std::complex<double> b) {
                return a.real() != b.real() ? a.real() < b.real() : a.imag() < b.imag();
            };
            std::sort(ref.begin(), ref.end(), less);
            double d = 0.0;
            for (std::size_t i = 0; i < 3; ++i) {
                d = std::max(d, std::abs(num[i] - ref[i]) / std::max(1.0, std::abs(ref[i])));
            }
            (cp.label == PointLabel::P3 ? worst3 : worst) = std::max(cp.label == PointLabel::P3 ? worst3 : worst, d);
        }
    }
    r.pass = worst <= 1e-10 && worst3 <= 1e-12;
    r.detail = "max relative deviation P0-P2 " + detail::fmt("%.3g", worst) + ", P3 " + detail::fmt("%.3g", worst3);
    return r;
}

// 7. Normal-form coefficients.
inline CheckResult check_normal_form(Context&) {
    CheckResult r{7, "normal form at P3: closed forms equal generic recomputation (1e-12) on a 10x10 grid; G011=G111=G300=0", false, {}, 0.0};
    double worst = 0.0, taylor_worst = 0.0;
    bool zeros = true;
    auto d = [](std::complex<double> a, std::complex<double> b) { return std::abs(a - b) / std::max(1.0, std::abs(a)); };
    for (int i = 0; i < 10; ++i) {
        for (int j = 0; j < 10; ++j) {
            const Params p(1.2 + 0.5 * i, 0.1 + 0.45 * j);
            const double om = std::sqrt(p.m() - 1.0);
            const auto c = normal_form_p3(p);
            const auto tc = taylor_coefficients_p3(p);
            const auto g = normal_form_from_taylor(tc, om);
            worst = std::max({worst, d(c.G200, g.G200), d(c.H110, g.H110), d(c.H210, g.H210), d(c.H021, g.H021),
                              d(c.G011, g.G011), d(c.G111, g.G111), d(c.G300, g.G300)});
            zeros = zeros && c.G011 == 0.0 && c.G111 == 0.0 && c.G300 == 0.0 && g.G011 == 0.0 && g.G111 == 0.0 &&
                    g.G300 == 0.0;
            // the closed-form Taylor coefficients themselves, against the field
            const auto tf = taylor_coefficients_from_field(p);
            for (auto [a, b] : {std::pair{tc.g200, tf.g200}, {tc.g110, tf.g110}, {tc.g101, tf.g101},
                                {tc.g020, tf.g020}, {tc.g002, tf.g002}, {tc.g011, tf.g011}, {tc.h200, tf.h200},
                                {tc.h110, tf.h110}, {tc.h101, tf.h101}, {tc.h020, tf.h020}, {tc.h002, tf.h002},
                                {tc.h011, tf.h011}}) {
                taylor_worst = std::max(taylor_worst, d(a, b));
            }
        }
    }
    r.pass = worst <= 1e-12 && zeros && taylor_worst <= 1e-12;
    r.detail = "max relative deviation " + detail::fmt("%.3g", worst) + (zeros ? ", exact zeros hold" : ", zeros FAIL") +
               "; Taylor coefficients vs field " + detail::fmt("%.3g", taylor_worst);
    return r;
}

// 8. Outgoing spiral around P3.
inline CheckResult check_spiral(Context&) {
    CheckResult r{8, "P3 spiral (m=2, sigma=1) from (0.05,0.01,1.01): >= 5 strictly increasing section distances, then escape with Y<0", false, {}, 0.0};
    const Params p(2.0, 1.0);
    const auto rep = p3_spiral_diagnostic(p, {0.05, 0.01, 1.01}, 1000, {}, 1e4, 50.0);
    int run = rep.radii.empty() ? 0 : 1, best = run;
    for (std::size_t i = 1; i < rep.radii.size(); ++i) {
        run = rep.radii[i] > rep.radii[i - 1] ? run + 1 : 1;
        best = std::max(best, run);
    }
    r.pass = best >= 5 && rep.escaped && rep.final_state.Y < 0;
    r.detail = std::to_string(rep.radii.size()) + " returns, longest increasing run " + std::to_string(best) +
               ", escaped=" + (rep.escaped ? "yes" : "no") + " final Y=" + detail::num(rep.final_state.Y);
    return r;
}

// 9. Cylinder flux, exterior invariance, X = 0 first integral.
inline CheckResult check_cylinder(Context& ctx) {
    CheckResult r{9, "cylinder: flux identity at 1e4 points (1e-12); 100 exterior orbits stay outside (-1e-8); K conserved at sigma=0 (1e-8)", false, {}, 0.0};
    std::mt19937_64 rng(ctx.seed + 9);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    double flux_worst = 0.0;
    const Params fp[3] = {Params(2.0, 0.5), Params(2.0, 2.0), Params(3.0, 1.0)};
    for (int k = 0; k < 10000; ++k) {
        const Params& p = fp[k % 3];
        const double m = p.m();
        const double Y = (2.0 * U(rng) - 1.0) * p.h0();
        const PhaseState s{3.0 * U(rng), Y, 2.0 * m / (m + 1.0) - m * Y * Y};
        const double full = cylinder_normal_flow(p, s);
        const double simple = p.sigma() * s.X * s.Z / m;
        flux_worst = std::max(flux_worst, std::abs(full - simple) / std::max(1.0, std::abs(simple)));
    }
    int outside = 0, indeterminate = 0;
    double min_c = INFINITY;
    for (int k = 0; k < 100; ++k) {
        const Params& p = fp[k % 3];
        PhaseState s;
        do {
            s = {3.0 * U(rng), 4.0 * U(rng) - 2.0, 3.0 * U(rng)};
        } while (!(cylinder_value(p, s) > 0.01));
        const auto c = cylinder_invariance_check(p, s, 50.0);
        if (!c.outside) ++indeterminate;
        else if (*c.outside) ++outside;
        min_c = std::min(min_c, c.min_value);
    }
    double k_worst = 0.0;
    const Params p0(2.0, 0.0);
    for (int k = 0; k < 20; ++k) {
        const PhaseState s{0.0, 2.0 * U(rng) - 1.0, 0.2 + 1.5 * U(rng)};
        IntegratorConfig ic;
        ic.rel_tol = 1e-12;
        ic.abs_tol = 1e-14;
        const auto o = orbit_report(p0, s, 5.0, ic, 1e3);
        const double K0 = x0_first_integral(p0, s.Y, s.Z);
        for (const auto& q : o.states) {
            k_worst = std::max(k_worst, std::abs(x0_first_integral(p0, q.Y, q.Z) - K0) / std::max(1.0, std::abs(K0)));
        }
    }
    r.pass = flux_worst <= 1e-12 && outside == 100 && k_worst <= 1e-8;
    r.detail = "flux deviation " + detail::fmt("%.3g", flux_worst) + "; outside " + std::to_string(outside) +
               "/100 (indeterminate " + std::to_string(indeterminate) + ", min cylinder value " +
               detail::fmt("%.3g", min_c) + "); K drift " + detail::fmt("%.3g", k_worst);
    return r;
}

// 10. Integral identity on all profiles from 1-5, monotone pairs.
inline CheckResult check_identity_monotone(Context& ctx) {
    CheckResult r{10, "integral identity < 1e-6 on every profile of checks 1-5; monotone pairs on {2,3}x{0.25,0.5,1} (20 each)", false, {}, 0.0};
    double worst = 0.0;
    std::string worst_label = "-";
    for (const auto& [label, prof] : ctx.profiles) {
        const double res = integral_identity_residual(prof, detail::end_point(prof));
        if (!(res <= worst)) {
            worst = res;
            worst_label = label;
        }
    }
    std::mt19937_64 rng(ctx.seed + 10);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    int good = 0, total = 0;
    for (double m : {2.0, 3.0}) {
        for (double s : {0.25, 0.5, 1.0}) {
            const Params p(m, s);
            for (int k = 0; k < 20; ++k) {
                const double a1 = 0.2 + 2.8 * U(rng);
                const double u = U(rng);
                const auto c = k % 2 == 0 ? monotone_pair_check(p, a1, 0.0, a1, 0.05 + u, 30.0)
                                          : monotone_pair_check(p, a1, 0.0, a1 * (1.01 + 0.5 * u), 0.0, 30.0);
                ++total;
                if (c.ok) ++good;
            }
        }
    }
    r.pass = !ctx.profiles.empty() && worst < 1e-6 && good == total;
    r.detail = std::to_string(ctx.profiles.size()) + " profiles, worst residual " + detail::fmt("%.3g", worst) + " (" +
               worst_label + "); monotone pairs " + std::to_string(good) + "/" + std::to_string(total);
    return r;
}

/// Runs all checks in order; `on_result` sees each result as it completes.
inline std::vector<CheckResult> run_all(std::uint64_t seed = 0,
                                        const std::function<void(const CheckResult&)>& on_result = {}) {
    Context ctx;
    ctx.seed = seed;
    using Fn = CheckResult (*)(Context&);
    const Fn checks[] = {check_sigma0_regression, check_multiplicity,
                         [](Context& c) { return check_extended_multiplicity(c); },
                         check_nonexistence, check_negative_slope, check_catalog, check_normal_form, check_spiral,
                         check_cylinder, check_identity_monotone};
    std::vector<CheckResult> out;
    int id = 1;
    for (Fn f : checks) {
        const auto t0 = std::chrono::steady_clock::now();
        CheckResult r;
        try {
            r = f(ctx);
        } catch (const std::exception& e) {
            r = {id, "check " + std::to_string(id), false, std::string("exception: ") + e.what()};
        }
        r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (on_result) on_result(r);
        out.push_back(std::move(r));
        ++id;
    }
    return out;
}

inline std::string format_line(const CheckResult& r) {
    char head[48];
    std::snprintf(head, sizeof head, "[%s] AC%d (%.2fs) ", r.pass ? "PASS" : "FAIL", r.id, r.seconds);
    return std::string(head) + r.name + " :: " + r.detail;
}

}  // namespace blowup::verify
