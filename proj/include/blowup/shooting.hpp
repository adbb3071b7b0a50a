#pragma once

// Shooting for profiles of the g-equation.
//
// Forward shots leave the axis with g = a^m, g' = m a^(m-1) f'(0). Backward
// shots start just left of an interface xi0 from the leading term of the
// interface expansion and run to xi = 0. Good profiles with interface are the
// zeros of xi0 -> f'(0) along backward shots.

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <thread>
#include <variant>
#include <vector>

#include "blowup/integrate.hpp"
#include "blowup/model.hpp"
#include "blowup/params.hpp"

namespace blowup {

struct ShotConfig {
    IntegratorConfig integrator{};
    double xi_max = 1e3;
    /// Stored samples are at most this far apart (feeds the quadrature of
    /// integral_identity_residual). 0 keeps accepted steps only.
    double sample_spacing = 1e-2;
    /// Backward-shot start offset, relative to xi0.
    double epsilon_rel = 1e-6;
    /// A zero of g with |g'| below this fraction of max|g'| is an interface.
    double vanish_rel_tol = 1e-6;
    /// A minimum of g below this fraction of max g counts as touching down.
    double touchdown_rel_tol = 1e-6;
    double z_max = 1e6;
    double slope_tol = 1e-6;
    int max_bisections = 60;
    double dedup_tol = 1e-6;
    double residual_tol = 1e-6;
    /// Worker threads for grid evaluations; 0 means BLOWUP_NUM_THREADS or the
    /// hardware count.
    unsigned threads = 0;

    void validate() const {
        integrator.validate();
        if (!(xi_max > 0) || !(sample_spacing >= 0) || !(epsilon_rel > 0 && epsilon_rel < 0.1) ||
            !(vanish_rel_tol > 0) || !(touchdown_rel_tol > 0) || !(z_max > 0) || !(slope_tol > 0) ||
            max_bisections < 1 || max_bisections > 200 || !(dedup_tol >= 0) || !(residual_tol > 0)) {
            throw DomainError("ShotConfig: invalid setting");
        }
    }
};

namespace outcome {
struct Interface {
    double xi0;
};
struct VerticalSlope {
    double xi0;
};
struct ReachedOrigin {
    double f0;
    double slope;
};
struct Diverged {
    std::string reason;
};
struct Exhausted {};
}  // namespace outcome

using ShotOutcome = std::variant<outcome::Interface, outcome::VerticalSlope, outcome::ReachedOrigin,
                                 outcome::Diverged, outcome::Exhausted>;

inline std::string describe(const ShotOutcome& o) {
    char buf[128];
    return std::visit(
        [&](const auto& v) -> std::string {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, outcome::Interface>) {
                std::snprintf(buf, sizeof buf, "Interface{xi0=%.17g}", v.xi0);
                return buf;
            } else if constexpr (std::is_same_v<T, outcome::VerticalSlope>) {
                std::snprintf(buf, sizeof buf, "VerticalSlope{xi0=%.17g}", v.xi0);
                return buf;
            } else if constexpr (std::is_same_v<T, outcome::ReachedOrigin>) {
                std::snprintf(buf, sizeof buf, "ReachedOrigin{f0=%.17g, slope=%.17g}", v.f0, v.slope);
                return buf;
            } else if constexpr (std::is_same_v<T, outcome::Diverged>) {
                return "Diverged{" + v.reason + "}";
            } else {
                return "Exhausted";
            }
        },
        o);
}

inline const char* outcome_name(const ShotOutcome& o) {
    static constexpr const char* names[] = {"Interface", "VerticalSlope", "ReachedOrigin", "Diverged", "Exhausted"};
    return names[o.index()];
}

struct ShotResult {
    Profile profile;
    ShotOutcome outcome;
    long steps = 0;
};

/// Interface if g' is negligible where g vanishes, VerticalSlope otherwise.
inline bool classify_vanish(double dg_at_zero, double max_abs_dg, double rel_tol) {
    return std::abs(dg_at_zero) < rel_tol * max_abs_dg;
}

/// Leading-order interface data at distance eps left of xi0: (g, g').
inline std::pair<double, double> interface_series(const Params& p, double eps) {
    const double m = p.m();
    const double C = (m - 1.0) * p.h0() / (2.0 * std::sqrt(m * (m - 1.0)));
    const double ce = C * eps;
    return {std::pow(ce, 2.0 * m / (m - 1.0)), -(2.0 * m / (m - 1.0)) * C * std::pow(ce, (m + 1.0) / (m - 1.0))};
}

namespace detail {

enum ShotEvent : std::size_t { kGZero = 0, kDgZero = 1, kPhiMax = 2, kBound = 3 };

struct RawShot {
    Trajectory<2> tr;
    double g_max = 0.0;
};

// Integrates the extended g-equation from (xi_start, y0) to xi_end with the
// standard event set. A touchdown (g' = 0 with g'' > 0 and g tiny against the
// largest g seen) stops the shot in either direction: g = f^m may touch zero
// without changing sign. The Z bound is forward-only.
inline RawShot raw_shot(const Params& p, double xi_start, const Vec<2>& y0, double xi_end, const ShotConfig& cfg,
                        const IntegratorConfig& icfg, bool forward) {
    auto rhs = [&p](double xi, const Vec<2>& y) { return Vec<2>{y[1], rhs_g_extended(p, xi, y[0])}; };
    auto g_max = std::make_shared<double>(std::max(y0[0], 0.0));
    std::vector<Event<2>> ev;
    ev.push_back({EventKind::GZero, Direction::Falling, true, [g_max](double, const Vec<2>& y) {
                      *g_max = std::max(*g_max, y[0]);
                      return y[0];
                  }});
    Event<2> dz{EventKind::DgZero, Direction::Any, false, [](double, const Vec<2>& y) { return y[1]; }};
    const double tol = cfg.touchdown_rel_tol;
    dz.stop_if = [&p, g_max, tol](double xi, const Vec<2>& y) {
        return rhs_g_extended(p, std::abs(xi), y[0]) > 0.0 && y[0] < tol * *g_max;
    };
    ev.push_back(std::move(dz));
    ev.push_back({EventKind::HyperbolaPhiMaxCross, Direction::Any, false,
                  [&p](double xi, const Vec<2>& y) { return phi_max_indicator(p, std::abs(xi), y[0]); }});
    if (forward) {
        const double zmax = cfg.z_max;
        ev.push_back({EventKind::StateBound, Direction::Rising, true, [&p, zmax](double xi, const Vec<2>& y) {
                          const double f = std::pow(std::max(y[0], 0.0), 1.0 / p.m());
                          return (p.m() - 1.0) * weight(p, std::abs(xi)) * std::pow(f, p.m() - 1.0) - zmax;
                      }});
    }
    RawShot out;
    out.tr = integrate<2>(rhs, y0, xi_start, xi_end, std::span<const Event<2>>(ev), icfg);
    out.g_max = *g_max;
    for (const auto& y : out.tr.y) out.g_max = std::max(out.g_max, y[0]);
    return out;
}

// Samples (in increasing xi) plus event annotations -> Profile.
inline Profile build_profile(const Params& p, const Trajectory<2>& tr, Provenance prov, bool reversed) {
    std::vector<ProfileState> s;
    s.reserve(tr.t.size() + 1);
    for (std::size_t i = 0; i < tr.t.size(); ++i) s.push_back({tr.t[i], tr.y[i][0], tr.y[i][1]});
    if (auto te = tr.terminal_event(); te && te->index == kGZero) s.back().g = 0.0;
    if (reversed) std::reverse(s.begin(), s.end());
    // Drop any non-increasing neighbours produced by a terminal event landing
    // on a stored point.
    std::vector<ProfileState> clean;
    clean.reserve(s.size());
    for (const auto& x : s) {
        if (clean.empty() || x.xi > clean.back().xi) clean.push_back(x);
    }
    Profile prof(p, std::move(clean), prov);
    for (const auto& r : tr.events) {
        const double xi = r.location;
        if (r.index == kDgZero) {
            if (rhs_g_extended(p, xi, r.state[0]) < 0.0) {
                prof.add_maximum(xi, r.state[0]);
            } else {
                prof.add_minimum(xi);
            }
        } else if (r.index == kPhiMax) {
            prof.add_phi_max_crossing(xi);
        }
    }
    return prof;
}

inline double max_abs_dg(const Trajectory<2>& tr) {
    double m = 0.0;
    for (const auto& y : tr.y) m = std::max(m, std::abs(y[1]));
    return m;
}

inline IntegratorConfig forward_integrator(const Params& p, const ShotConfig& cfg) {
    IntegratorConfig c = cfg.integrator;
    c.max_sample_spacing = cfg.sample_spacing;
    // g'' ~ xi^(sigma-1) near the axis when sigma < 1: start small.
    if (p.sigma() > 0.0 && p.sigma() < 1.0) c.initial_step_cap = std::min(c.initial_step_cap, 1e-6);
    return c;
}

inline IntegratorConfig backward_integrator(const ShotConfig& cfg, double g_start, double spacing) {
    IntegratorConfig c = cfg.integrator;
    c.max_sample_spacing = spacing;
    // g starts at (C eps)^(2m/(m-1)); the absolute floor must sit below it.
    c.abs_tol = std::max(std::min(c.abs_tol, 1e-8 * g_start), 1e-300);
    return c;
}

// g at xi_target from a backward shot started at xi0; nullopt if g vanished first.
inline std::optional<double> backward_g_at(const Params& p, double xi0, double xi_target, const ShotConfig& cfg) {
    const double eps = std::min(cfg.epsilon_rel * xi0, 0.5 * (xi0 - xi_target));
    if (!(eps > 0)) return std::nullopt;
    const auto [g, dg] = interface_series(p, eps);
    auto rhs = [&p](double xi, const Vec<2>& y) { return Vec<2>{y[1], rhs_g_extended(p, xi, y[0])}; };
    std::vector<Event<2>> ev;
    ev.push_back({EventKind::GZero, Direction::Falling, true, [](double, const Vec<2>& y) { return y[0]; }});
    const auto tr = integrate<2>(rhs, Vec<2>{g, dg}, xi0 - eps, xi_target, std::span<const Event<2>>(ev),
                                 backward_integrator(cfg, g, 0.0));
    if (tr.reason != Termination::Completed) return std::nullopt;
    return tr.y.back()[0];
}

// Refines the interface of a forward shot that ended at xi_end: the backward
// shot whose value matches the forward solution at a point still well above
// zero is tracked instead of the ill-conditioned approach to g = 0.
inline std::optional<double> refine_interface(const Params& p, const Profile& fwd, double xi_end,
                                              const ShotConfig& cfg) {
    const auto& s = fwd.samples();
    std::size_t k = s.size() - 1;
    while (k > 0 && s[k - 1].g >= s[k].g) --k;  // last peak
    const double g_peak = s[k].g;
    if (!(g_peak > 0)) return std::nullopt;
    std::size_t j = s.size() - 1;
    while (j > k && s[j].g < 1e-2 * g_peak) --j;
    if (j == k || j + 1 >= s.size()) return std::nullopt;
    const double xi_m = s[j].xi;
    const double target = s[j].g;
    auto D = [&](double xi0) -> std::optional<double> {
        auto g = backward_g_at(p, xi0, xi_m, cfg);
        if (!g) return std::nullopt;
        return *g - target;
    };
    double lo = xi_m + 0.25 * (xi_end - xi_m);
    double hi = xi_end + (xi_end - xi_m);
    auto dlo = D(lo);
    auto dhi = D(hi);
    for (int i = 0; i < 20 && dlo && *dlo > 0; ++i) {
        lo = xi_m + 0.5 * (lo - xi_m);
        dlo = D(lo);
    }
    for (int i = 0; i < 20 && dhi && *dhi < 0; ++i) {
        hi = xi_m + 2.0 * (hi - xi_m);
        dhi = D(hi);
    }
    if (!dlo || !dhi || *dlo > 0 || *dhi < 0) return std::nullopt;
    for (int it = 0; it < 200 && hi - lo > 4e-15 * hi; ++it) {
        const double mid = 0.5 * (lo + hi);
        const auto dm = D(mid);
        if (!dm) return std::nullopt;
        (*dm < 0 ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

}  // namespace detail

/// Forward shot from the axis: f(0) = a, f'(0) = fprime0.
inline ShotResult shoot_forward(const Params& p, double a, double xi_max, const ShotConfig& cfg = {},
                                double fprime0 = 0.0) {
    cfg.validate();
    if (!(a > 0) || !std::isfinite(a)) throw DomainError("shoot_forward: a must be > 0");
    if (!(xi_max > 0) || !std::isfinite(xi_max)) throw DomainError("shoot_forward: xi_max must be > 0");
    const double m = p.m();
    const Vec<2> y0{std::pow(a, m), m * std::pow(a, m - 1.0) * fprime0};
    const auto raw = detail::raw_shot(p, 0.0, y0, xi_max, cfg, detail::forward_integrator(p, cfg), true);
    const auto& tr = raw.tr;
    Profile prof = detail::build_profile(p, tr, ForwardShot{a}, false);
    prof.set_slope_at_origin(fprime0);

    ShotOutcome out = outcome::Exhausted{};
    if (const auto te = tr.terminal_event()) {
        const double xi = te->location;
        bool interface = false;
        if (te->index == detail::kGZero) {
            interface = classify_vanish(te->state[1], detail::max_abs_dg(tr), cfg.vanish_rel_tol);
            if (!interface) out = outcome::VerticalSlope{xi};
        } else if (te->index == detail::kDgZero) {
            interface = true;
        } else {
            out = outcome::Diverged{"Z exceeded z_max (no orbit enters Q4)"};
        }
        if (interface) {
            const auto refined = detail::refine_interface(p, prof, xi, cfg);
            const double xi0 = refined.value_or(xi);
            prof.set_interface(xi0);
            out = outcome::Interface{xi0};
        }
    } else if (tr.reason != Termination::Completed) {
        out = outcome::Diverged{to_string(tr.reason)};
    }
    return {std::move(prof), out, tr.steps};
}

/// Backward shot from the interface xi0, started at xi0 - epsilon.
///
/// ReachedOrigin when g stays positive down to xi = 0; otherwise the outcome
/// records where g vanished on the way (VerticalSlope, or Interface for a
/// tangential zero).
inline ShotResult shoot_backward(const Params& p, double xi0, double epsilon, const ShotConfig& cfg = {}) {
    cfg.validate();
    if (!(xi0 > 0) || !std::isfinite(xi0)) throw DomainError("shoot_backward: xi0 must be > 0");
    if (!(epsilon > 0) || !(epsilon < 0.5 * xi0)) throw DomainError("shoot_backward: need 0 < epsilon << xi0");
    const auto [g, dg] = interface_series(p, epsilon);
    const auto raw = detail::raw_shot(p, xi0 - epsilon, Vec<2>{g, dg}, 0.0, cfg,
                                      detail::backward_integrator(cfg, g, cfg.sample_spacing), false);
    const auto& tr = raw.tr;
    Profile prof = [&] {
        Profile tmp = detail::build_profile(p, tr, BackwardShot{xi0, epsilon}, true);
        // Close the profile with the exact interface point.
        auto samples = tmp.samples();
        samples.push_back({xi0, 0.0, 0.0});
        Profile full(p, std::move(samples), tmp.provenance());
        for (double x : tmp.maxima()) full.add_maximum(x, tmp.at(x).g);
        for (double x : tmp.minima()) full.add_minimum(x);
        for (double x : tmp.phi_max_crossings()) full.add_phi_max_crossing(x);
        full.set_interface(xi0);
        return full;
    }();

    ShotOutcome out = outcome::Exhausted{};
    if (const auto te = tr.terminal_event()) {
        const double xi = te->location;
        if (classify_vanish(te->state[1], detail::max_abs_dg(tr), cfg.vanish_rel_tol)) {
            out = outcome::Interface{xi};
        } else {
            out = outcome::VerticalSlope{xi};
        }
    } else if (tr.reason == Termination::Completed) {
        const auto& y = tr.y.back();
        const double f0 = f_from_g(p, std::max(y[0], 0.0));
        const double slope = fprime_from_g(p, y[0], y[1]);
        if (f0 > 0.0 && std::isfinite(slope)) {
            prof.set_slope_at_origin(slope);
            out = outcome::ReachedOrigin{f0, slope};
        } else {
            out = outcome::VerticalSlope{0.0};
        }
    } else {
        out = outcome::Diverged{to_string(tr.reason)};
    }
    return {std::move(prof), out, tr.steps};
}

inline ShotResult shoot_backward(const Params& p, double xi0, const ShotConfig& cfg = {}) {
    return shoot_backward(p, xi0, cfg.epsilon_rel * xi0, cfg);
}

struct SlopeEval {
    double xi0 = 0.0;
    double slope = 0.0;
    double f0 = 0.0;
    /// Slope at half the start offset.
    double slope_half = 0.0;
    bool reliable = false;
    std::string failure;  // empty when both shots reached the origin
};

/// f'(0) of the backward shot from xi0, never throwing; `reliable` reports the
/// halving check 1e-4 (1 + |slope|).
inline SlopeEval try_slope(const Params& p, double xi0, const ShotConfig& cfg = {}) {
    SlopeEval e;
    e.xi0 = xi0;
    ShotConfig lean = cfg;
    lean.sample_spacing = 0.0;
    const double eps = cfg.epsilon_rel * xi0;
    const auto r1 = shoot_backward(p, xi0, eps, lean);
    const auto* o1 = std::get_if<outcome::ReachedOrigin>(&r1.outcome);
    if (!o1) {
        e.failure = describe(r1.outcome);
        return e;
    }
    e.slope = o1->slope;
    e.f0 = o1->f0;
    const auto r2 = shoot_backward(p, xi0, 0.5 * eps, lean);
    const auto* o2 = std::get_if<outcome::ReachedOrigin>(&r2.outcome);
    if (!o2) {
        e.failure = "half-epsilon shot: " + describe(r2.outcome);
        return e;
    }
    e.slope_half = o2->slope;
    e.reliable = std::abs(e.slope - e.slope_half) <= 1e-4 * (1.0 + std::abs(e.slope));
    if (!e.reliable) e.failure = "epsilon halving changed the slope";
    return e;
}

/// f'(0) of the backward shot from xi0. Throws NumericalError when the shot
/// does not reach the axis or the halving check fails.
inline double slope_fn(const Params& p, double xi0, const ShotConfig& cfg = {}) {
    if (!(xi0 > 0)) throw DomainError("slope_fn: xi0 must be > 0");
    const auto e = try_slope(p, xi0, cfg);
    if (!e.reliable) throw NumericalError("slope_fn(" + std::to_string(xi0) + "): " + e.failure);
    return e.slope;
}

/// Local maxima of f: interior maxima recorded along the profile, plus the
/// axis when the profile is even there (zero slope) and g'' < 0 at xi = 0.
/// Events within 1e-4 of the sampled span from either end are ignored.
inline int count_maxima(const Profile& prof, double slope_tol = 1e-6) {
    const double a = prof.xi_begin(), b = prof.xi_end();
    const double guard = 1e-4 * (b - a);
    int n = 0;
    for (double x : prof.maxima()) {
        if (x > a + guard && x < b - guard) ++n;
    }
    if (a == 0.0) {
        const auto& s0 = prof.samples().front();
        const double f0 = f_from_g(prof.params(), std::max(s0.g, 0.0));
        const double slope = prof.slope_at_origin().value_or(fprime_from_g(prof.params(), s0.g, s0.dg));
        if (f0 > 0.0 && std::abs(slope) < slope_tol && rhs_g_extended(prof.params(), 0.0, s0.g) < 0.0) ++n;
    }
    return n;
}

struct GoodProfile {
    Params params;
    double a;    // f(0)
    double xi0;  // interface
    double slope;
    int n_max;
    double residual;  // integral identity at xi0
    Profile profile;
};

struct GoodProfileSearch {
    std::vector<GoodProfile> profiles;
    std::vector<SlopeEval> grid;
    int unreliable = 0;       // grid or bisection evaluations that failed
    int unconverged = 0;      // sign changes whose bisection did not reach slope_tol
    int rejected = 0;         // roots whose profile failed validation
    std::vector<std::string> warnings;
};

namespace detail {

inline unsigned worker_count(unsigned requested) {
    if (requested > 0) return requested;
    unsigned n = std::max(1u, std::thread::hardware_concurrency());
    if (const char* env = std::getenv("BLOWUP_NUM_THREADS")) {
        const long v = std::strtol(env, nullptr, 10);
        if (v > 0) n = std::min<unsigned>(n, static_cast<unsigned>(v));
        if (v > 0 && std::thread::hardware_concurrency() == 0) n = static_cast<unsigned>(v);
    }
    return n;
}

// out[i] = fn(i); results land by index, so scheduling never changes them.
template <class T, class Fn>
std::vector<T> parallel_map(std::size_t n, Fn&& fn, unsigned threads) {
    std::vector<T> out(n);
    const unsigned w = std::min<std::size_t>(worker_count(threads), std::max<std::size_t>(n, 1));
    if (w <= 1) {
        for (std::size_t i = 0; i < n; ++i) out[i] = fn(i);
        return out;
    }
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < w; ++t) {
        pool.emplace_back([&, t] {
            for (std::size_t i = t; i < n; i += w) out[i] = fn(i);
        });
    }
    for (auto& th : pool) th.join();
    return out;
}

}  // namespace detail

/// Builds and validates the good profile with interface xi0. Returns nullopt
/// with a reason when validation fails.
inline std::optional<GoodProfile> make_good_profile(const Params& p, double xi0, const ShotConfig& cfg,
                                                    std::string* why = nullptr) {
    auto fail = [&](std::string w) -> std::optional<GoodProfile> {
        if (why) *why = std::move(w);
        return std::nullopt;
    };
    ShotResult r = [&]() -> ShotResult {
        try {
            return shoot_backward(p, xi0, cfg);
        } catch (const NumericalError& e) {
            // a maximum below the equilibrium curve
            return {Profile(p, {{0.0, 0.0, 0.0}}, Tabulated{}), outcome::Diverged{e.what()}, 0};
        }
    }();
    const auto* o = std::get_if<outcome::ReachedOrigin>(&r.outcome);
    if (!o) return fail("backward shot: " + describe(r.outcome));
    if (!(std::abs(o->slope) < cfg.slope_tol)) return fail("slope above tolerance");
    const double res = integral_identity_residual(r.profile, xi0);
    if (!(res < cfg.residual_tol)) return fail("integral identity residual " + std::to_string(res));
    const int n = count_maxima(r.profile, cfg.slope_tol);
    if (n < 1) return fail("no local maximum");
    return GoodProfile{p, o->f0, xi0, o->slope, n, res, std::move(r.profile)};
}

/// Good profiles with interface in [xi0s.front(), xi0s.back()], from sign
/// changes of slope_fn on the given increasing grid.
inline GoodProfileSearch find_good_profiles(const Params& p, const std::vector<double>& xi0s,
                                            const ShotConfig& cfg = {}) {
    cfg.validate();
    if (xi0s.size() < 2) throw DomainError("find_good_profiles: grid needs >= 2 points");
    for (std::size_t i = 0; i < xi0s.size(); ++i) {
        if (!(xi0s[i] > 0) || (i > 0 && !(xi0s[i] > xi0s[i - 1]))) {
            throw DomainError("find_good_profiles: grid must be positive and increasing");
        }
    }
    GoodProfileSearch out;
    out.grid = detail::parallel_map<SlopeEval>(
        xi0s.size(), [&](std::size_t i) { return try_slope(p, xi0s[i], cfg); }, cfg.threads);
    for (const auto& e : out.grid) {
        if (!e.reliable) ++out.unreliable;
    }

    struct Bracket {
        SlopeEval lo, hi;
    };
    std::vector<Bracket> brackets;
    for (std::size_t i = 0; i + 1 < out.grid.size(); ++i) {
        const auto& a = out.grid[i];
        const auto& b = out.grid[i + 1];
        if (a.reliable && b.reliable && ((a.slope < 0) != (b.slope < 0) || a.slope == 0.0)) {
            brackets.push_back({a, b});
        }
    }
    if (!brackets.empty() && out.grid.back().reliable && out.grid.back().slope == 0.0) {
        brackets.push_back({out.grid.back(), out.grid.back()});
    }

    struct Root {
        std::optional<double> xi0;
        int unreliable = 0;
        std::string note;
    };
    const auto roots = detail::parallel_map<Root>(
        brackets.size(),
        [&](std::size_t k) {
            Root r;
            SlopeEval lo = brackets[k].lo, hi = brackets[k].hi;
            if (std::abs(lo.slope) < cfg.slope_tol) {
                r.xi0 = lo.xi0;
                return r;
            }
            if (std::abs(hi.slope) < cfg.slope_tol) {
                r.xi0 = hi.xi0;
                return r;
            }
            for (int it = 0; it < cfg.max_bisections; ++it) {
                const double mid = 0.5 * (lo.xi0 + hi.xi0);
                const SlopeEval e = try_slope(p, mid, cfg);
                if (!e.reliable) {
                    ++r.unreliable;
                    r.note = "bisection near xi0=" + std::to_string(mid) + ": " + e.failure;
                    return r;
                }
                if (std::abs(e.slope) < cfg.slope_tol) {
                    r.xi0 = mid;
                    return r;
                }
                ((e.slope < 0) == (lo.slope < 0) ? lo : hi) = e;
            }
            r.note = "bisection stalled between xi0=" + std::to_string(lo.xi0) + " and " + std::to_string(hi.xi0);
            return r;
        },
        cfg.threads);

    std::vector<double> found;
    for (const auto& r : roots) {
        out.unreliable += r.unreliable;
        if (r.xi0) {
            found.push_back(*r.xi0);
        } else {
            ++out.unconverged;
            out.warnings.push_back(r.note);
        }
    }
    std::sort(found.begin(), found.end());
    std::vector<double> unique;
    for (double x : found) {
        if (unique.empty() || x - unique.back() > cfg.dedup_tol) unique.push_back(x);
    }
    auto built = detail::parallel_map<std::optional<GoodProfile>>(
        unique.size(),
        [&](std::size_t k) {
            std::string why;
            auto g = make_good_profile(p, unique[k], cfg, &why);
            return g;
        },
        cfg.threads);
    for (std::size_t k = 0; k < built.size(); ++k) {
        if (built[k]) {
            out.profiles.push_back(std::move(*built[k]));
        } else {
            ++out.rejected;
            out.warnings.push_back("root at xi0=" + std::to_string(unique[k]) + " failed validation");
        }
    }
    return out;
}

/// Uniform grid of grid_n points on [xi0_lo, xi0_hi].
inline GoodProfileSearch find_good_profiles(const Params& p, double xi0_lo, double xi0_hi, int grid_n = 33,
                                            const ShotConfig& cfg = {}) {
    if (!(xi0_lo > 0) || !(xi0_hi > xi0_lo) || grid_n < 2) {
        throw DomainError("find_good_profiles: need 0 < xi0_lo < xi0_hi and grid_n >= 2");
    }
    std::vector<double> g(static_cast<std::size_t>(grid_n));
    for (int i = 0; i < grid_n; ++i) g[i] = xi0_lo + (xi0_hi - xi0_lo) * i / (grid_n - 1);
    g.back() = xi0_hi;
    return find_good_profiles(p, g, cfg);
}

struct ScanRow {
    double sigma;
    std::vector<double> xi0;
    std::vector<int> n_max;
    std::vector<double> a;
    int unreliable = 0;
    std::string error;  // non-empty when the sigma value could not be scanned
    std::vector<GoodProfile> profiles;

    std::size_t count() const { return xi0.size(); }
};

/// Good profiles per sigma over the grid xi0_hi k/grid_n, k = 1..grid_n.
inline std::vector<ScanRow> multiplicity_scan(double m, std::vector<double> sigmas, double xi0_hi, int grid_n = 33,
                                              const ShotConfig& cfg = {}) {
    if (!(xi0_hi > 0) || grid_n < 2) throw DomainError("multiplicity_scan: need xi0_hi > 0 and grid_n >= 2");
    std::sort(sigmas.begin(), sigmas.end());
    std::vector<double> grid(static_cast<std::size_t>(grid_n));
    for (int k = 1; k <= grid_n; ++k) grid[k - 1] = xi0_hi * k / grid_n;
    std::vector<ScanRow> rows;
    for (double s : sigmas) {
        ScanRow row{s, {}, {}, {}, 0, {}, {}};
        try {
            const Params p(m, s);
            auto res = find_good_profiles(p, grid, cfg);
            row.unreliable = res.unreliable;
            for (auto& gp : res.profiles) {
                row.xi0.push_back(gp.xi0);
                row.n_max.push_back(gp.n_max);
                row.a.push_back(gp.a);
                row.profiles.push_back(std::move(gp));
            }
        } catch (const std::exception& e) {
            row.error = e.what();
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

struct GapReport {
    double xi_plus;
    double xi_minus;
    bool gap;
    /// 2m sqrt(2m/(2m+1)); gap holds exactly when sigma exceeds it.
    double sigma_threshold;
};

/// Provable non-existence window: a good profile would need its first
/// hyperbola_phi_max crossing at xi <= xi_plus and its last at xi >= xi_minus.
inline GapReport nonexistence_gap(const Params& p) {
    if (!(p.sigma() > 0)) throw DomainError("nonexistence_gap: sigma must be > 0");
    const double m = p.m(), s = p.sigma();
    const double c3 = (m - 1.0) * (m - 1.0) * (m - 1.0);
    GapReport r;
    r.xi_plus = std::pow(4.0 * m * m * (m + 1.0) / ((2.0 * m + 1.0) * c3), 1.0 / (s + 2.0));
    r.xi_minus = std::pow((m + 1.0) * s * s / (2.0 * m * c3), 1.0 / (s + 2.0));
    r.gap = r.xi_minus > r.xi_plus;
    r.sigma_threshold = 2.0 * m * std::sqrt(2.0 * m / (2.0 * m + 1.0));
    const double lhs = s * s, rhs = 8.0 * m * m * m / (2.0 * m + 1.0);
    if (r.gap != (lhs > rhs) && std::abs(lhs - rhs) > 1e-12 * rhs) {
        throw NumericalError("nonexistence_gap: threshold identity violated");
    }
    return r;
}

/// Profile along the orbit leaving P2, i.e. f(0) = 0 with
/// f ~ [(m-1)/(2m(m+1))]^(1/(m-1)) xi^(2/(m-1)), integrated from xi_start.
inline ShotResult p2_orbit_profile(const Params& p, double xi_max, const ShotConfig& cfg = {},
                                   double xi_start = 1e-3) {
    cfg.validate();
    if (!(xi_start > 0) || !(xi_max > xi_start)) throw DomainError("p2_orbit_profile: need 0 < xi_start < xi_max");
    const double m = p.m();
    const double c = std::pow((m - 1.0) / (2.0 * m * (m + 1.0)), 1.0 / (m - 1.0));
    const double cm = std::pow(c, m);
    const Vec<2> y0{cm * std::pow(xi_start, 2.0 * m / (m - 1.0)),
                    (2.0 * m / (m - 1.0)) * cm * std::pow(xi_start, (m + 1.0) / (m - 1.0))};
    IntegratorConfig ic = cfg.integrator;
    ic.max_sample_spacing = cfg.sample_spacing;
    ic.abs_tol = std::max(std::min(ic.abs_tol, 1e-8 * y0[0]), 1e-300);
    const auto raw = detail::raw_shot(p, xi_start, y0, xi_max, cfg, ic, true);
    Profile prof = detail::build_profile(p, raw.tr, Tabulated{}, false);
    ShotOutcome out = outcome::Exhausted{};
    if (const auto te = raw.tr.terminal_event()) {
        out = te->index == detail::kGZero ? ShotOutcome{outcome::VerticalSlope{te->location}}
                                          : ShotOutcome{outcome::Diverged{"terminated"}};
    } else if (raw.tr.reason != Termination::Completed) {
        out = outcome::Diverged{to_string(raw.tr.reason)};
    }
    return {std::move(prof), out, raw.tr.steps};
}

}  // namespace blowup
