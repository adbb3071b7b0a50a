#pragma once

// Adaptive Dormand-Prince 5(4) integrator with dense output and event location.
//
// One integrator serves both the profile ODE (2 components) and the phase-space
// systems (3 components). Events are scalar functions of (t, y); sign changes
// are bracketed on the dense output and refined by bisection.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "blowup/params.hpp"

namespace blowup {

template <std::size_t N>
using Vec = std::array<double, N>;

struct IntegratorConfig {
    double rel_tol = 1e-10;
    double abs_tol = 1e-12;
    double max_step = std::numeric_limits<double>::infinity();
    /// Upper bound for the very first step (used near a Hoelder-continuous start).
    double initial_step_cap = std::numeric_limits<double>::infinity();
    long max_steps = 10'000'000;
    double event_tol = 1e-12;
    /// When positive, dense-output samples are inserted so consecutive stored
    /// points are at most this far apart in t.
    double max_sample_spacing = 0.0;

    void validate() const {
        if (!(rel_tol > 0) || !(abs_tol > 0) || !(event_tol > 0) || !(max_step > 0) ||
            !(initial_step_cap > 0) || max_steps < 1 || !(max_sample_spacing >= 0)) {
            throw DomainError("IntegratorConfig: tolerances must be positive and max_steps >= 1");
        }
    }
};

enum class EventKind { GZero, DgZero, HyperbolaPhiMaxCross, CylinderCross, StateBound };

/// Sign-change direction measured along the direction of integration.
enum class Direction { Rising, Falling, Any };

inline const char* to_string(EventKind k) {
    switch (k) {
        case EventKind::GZero: return "GZero";
        case EventKind::DgZero: return "DgZero";
        case EventKind::HyperbolaPhiMaxCross: return "HyperbolaPhiMaxCross";
        case EventKind::CylinderCross: return "CylinderCross";
        case EventKind::StateBound: return "StateBound";
    }
    return "?";
}

template <std::size_t N>
struct Event {
    EventKind kind;
    Direction direction = Direction::Any;
    bool terminal = false;
    std::function<double(double, const Vec<N>&)> fn;
    /// Optional: a non-terminal event stops integration when this returns true
    /// at the refined location.
    std::function<bool(double, const Vec<N>&)> stop_if = {};
};

template <std::size_t N>
struct EventRecord {
    EventKind kind;
    std::size_t index;  // position in the event list passed to integrate()
    double location;
    Vec<N> state;
    bool terminal;
};

enum class Termination { Completed, TerminalEvent, MaxStepsExceeded, StepUnderflow, NonFiniteState };

inline const char* to_string(Termination t) {
    switch (t) {
        case Termination::Completed: return "Completed";
        case Termination::TerminalEvent: return "TerminalEvent";
        case Termination::MaxStepsExceeded: return "MaxStepsExceeded";
        case Termination::StepUnderflow: return "StepUnderflow";
        case Termination::NonFiniteState: return "NonFiniteState";
    }
    return "?";
}

template <std::size_t N>
struct Trajectory {
    std::vector<double> t;
    std::vector<Vec<N>> y;
    std::vector<EventRecord<N>> events;
    Termination reason = Termination::Completed;
    long steps = 0;
    long rejected = 0;

    bool ok() const { return reason == Termination::Completed || reason == Termination::TerminalEvent; }
    std::optional<EventRecord<N>> terminal_event() const {
        if (reason == Termination::TerminalEvent && !events.empty() && events.back().terminal) {
            return events.back();
        }
        return std::nullopt;
    }
};

namespace detail {

// Dormand-Prince coefficients.
inline constexpr std::array<double, 6> kC = {0.0, 1.0 / 5, 3.0 / 10, 4.0 / 5, 8.0 / 9, 1.0};
inline constexpr double kA[6][5] = {
    {0, 0, 0, 0, 0},
    {1.0 / 5, 0, 0, 0, 0},
    {3.0 / 40, 9.0 / 40, 0, 0, 0},
    {44.0 / 45, -56.0 / 15, 32.0 / 9, 0, 0},
    {19372.0 / 6561, -25360.0 / 2187, 64448.0 / 6561, -212.0 / 729, 0},
    {9017.0 / 3168, -355.0 / 33, 46732.0 / 5247, 49.0 / 176, -5103.0 / 18656},
};
inline constexpr std::array<double, 6> kB = {35.0 / 384, 0.0, 500.0 / 1113, 125.0 / 192, -2187.0 / 6784,
                                             11.0 / 84};
// b - b_hat, including the FSAL stage.
inline constexpr std::array<double, 7> kE = {-71.0 / 57600, 0.0, 71.0 / 16695, -71.0 / 1920,
                                             17253.0 / 339200, -22.0 / 525, 1.0 / 40};
// Continuous extension: b_k(theta) = sum_j kP[k][j] theta^(j+1).
inline constexpr double kP[7][4] = {
    {1.0, -8048581381.0 / 2820520608, 8663915743.0 / 2820520608, -12715105075.0 / 11282082432},
    {0, 0, 0, 0},
    {0, 131558114200.0 / 32700410799, -68118460800.0 / 10900136933, 87487479700.0 / 32700410799},
    {0, -1754552775.0 / 470086768, 14199869525.0 / 1410260304, -10690763975.0 / 1880347072},
    {0, 127303824393.0 / 49829197408, -318862633887.0 / 49829197408, 701980252875.0 / 199316789632},
    {0, -282668133.0 / 205662961, 2019193451.0 / 616988883, -1453857185.0 / 822651844},
    {0, 40617522.0 / 29380423, -110615467.0 / 29380423, 69997945.0 / 29380423},
};

template <std::size_t N>
bool finite(const Vec<N>& v) {
    return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

template <std::size_t N>
struct Step {
    double t0;
    double h;  // signed
    Vec<N> y0;
    Vec<N> y1;
    std::array<Vec<N>, 7> k;

    Vec<N> at(double t) const {
        const double theta = (t - t0) / h;
        std::array<double, 7> b{};
        for (int s = 0; s < 7; ++s) {
            double p = 0.0;
            double th = theta;
            for (int j = 0; j < 4; ++j) {
                p += kP[s][j] * th;
                th *= theta;
            }
            b[s] = p;
        }
        Vec<N> y = y0;
        for (std::size_t i = 0; i < N; ++i) {
            double acc = 0.0;
            for (int s = 0; s < 7; ++s) acc += k[s][i] * b[s];
            y[i] += h * acc;
        }
        return y;
    }
    double t1() const { return t0 + h; }
};

inline bool crossed(double a, double b, Direction d) {
    const bool rising = a < 0.0 && b >= 0.0;
    const bool falling = a > 0.0 && b <= 0.0;
    switch (d) {
        case Direction::Rising: return rising;
        case Direction::Falling: return falling;
        case Direction::Any: return rising || falling;
    }
    return false;
}

template <std::size_t N>
double refine(const Step<N>& step, const std::function<double(double, const Vec<N>&)>& fn, double ta, double fa,
              double tb, double fb, double tol) {
    if (fb == 0.0) return tb;
    for (int it = 0; it < 300; ++it) {
        const double tm = 0.5 * (ta + tb);
        const double fm = fn(tm, step.at(tm));
        if (std::abs(fm) < tol) return tm;
        if ((fa < 0.0) == (fm < 0.0)) {
            ta = tm;
            fa = fm;
        } else {
            tb = tm;
            fb = fm;
        }
        const double scale = std::max(std::abs(ta), std::abs(tb));
        if (std::abs(tb - ta) <= 4.0 * std::numeric_limits<double>::epsilon() * scale ||
            std::abs(tb - ta) < std::numeric_limits<double>::min()) {
            break;
        }
    }
    return std::abs(fa) < std::abs(fb) ? ta : tb;
}

}  // namespace detail

/// Integrate y' = rhs(t, y) from t0 to t1 (either direction).
///
/// Stores every accepted step (plus dense samples when max_sample_spacing > 0).
/// Events are sampled at 8 points per step on the dense output; the first
/// terminal crossing truncates the trajectory at the refined location.
template <std::size_t N, class Rhs>
Trajectory<N> integrate(Rhs&& rhs, const Vec<N>& y0, double t0, double t1, std::span<const Event<N>> events,
                        const IntegratorConfig& cfg) {
    cfg.validate();
    if (!(t0 != t1) || !std::isfinite(t0) || !std::isfinite(t1)) {
        throw DomainError("integrate: need finite t0 != t1");
    }
    if (!detail::finite(y0)) throw DomainError("integrate: non-finite initial state");

    using detail::kA;
    using detail::kB;
    using detail::kC;
    using detail::kE;

    Trajectory<N> out;
    out.t.push_back(t0);
    out.y.push_back(y0);

    const double dir = t1 > t0 ? 1.0 : -1.0;
    const double span = std::abs(t1 - t0);
    auto scale_of = [&](const Vec<N>& a, const Vec<N>& b, std::size_t i) {
        return cfg.abs_tol + cfg.rel_tol * std::max(std::abs(a[i]), std::abs(b[i]));
    };
    auto norm = [](const Vec<N>& v) {
        double s = 0.0;
        for (double x : v) s += x * x;
        return std::sqrt(s / static_cast<double>(N));
    };

    double t = t0;
    Vec<N> y = y0;
    Vec<N> f0 = rhs(t, y);
    if (!detail::finite(f0)) {
        out.reason = Termination::NonFiniteState;
        return out;
    }

    // Initial step (Hairer, Norsett & Wanner, II.4).
    double h;
    {
        Vec<N> sc{};
        for (std::size_t i = 0; i < N; ++i) sc[i] = cfg.abs_tol + cfg.rel_tol * std::abs(y[i]);
        Vec<N> a{}, b{};
        for (std::size_t i = 0; i < N; ++i) {
            a[i] = y[i] / sc[i];
            b[i] = f0[i] / sc[i];
        }
        const double d0 = norm(a);
        const double d1 = norm(b);
        double h0 = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 : 0.01 * d0 / d1;
        h0 = std::min(h0, span);
        Vec<N> y1 = y;
        for (std::size_t i = 0; i < N; ++i) y1[i] += dir * h0 * f0[i];
        const Vec<N> f1 = rhs(t + dir * h0, y1);
        Vec<N> d{};
        for (std::size_t i = 0; i < N; ++i) d[i] = (f1[i] - f0[i]) / sc[i];
        const double d2 = detail::finite(f1) ? norm(d) / h0 : 0.0;
        const double h1 = (d1 <= 1e-15 && d2 <= 1e-15) ? std::max(1e-6, h0 * 1e-3)
                                                        : std::pow(0.01 / std::max(d1, d2), 1.0 / 5.0);
        h = std::min({100.0 * h0, h1, cfg.initial_step_cap, cfg.max_step, span});
    }

    const std::size_t ne = events.size();
    std::vector<double> ev_prev(ne);
    for (std::size_t e = 0; e < ne; ++e) ev_prev[e] = events[e].fn(t, y);

    constexpr double kSafety = 0.9;
    constexpr double kMinFactor = 0.2;
    constexpr double kMaxFactor = 10.0;

    while (dir * (t1 - t) > 0.0) {
        if (out.steps >= cfg.max_steps) {
            out.reason = Termination::MaxStepsExceeded;
            return out;
        }
        h = std::min({h, cfg.max_step, std::abs(t1 - t)});
        const double min_step = std::max(1e-15 * std::abs(t), std::numeric_limits<double>::denorm_min());
        if (h < min_step) {
            out.reason = Termination::StepUnderflow;
            return out;
        }

        detail::Step<N> step;
        step.t0 = t;
        step.y0 = y;
        step.h = dir * h;
        step.k[0] = f0;
        bool stage_ok = true;
        for (int s = 1; s < 6 && stage_ok; ++s) {
            Vec<N> ys = y;
            for (std::size_t i = 0; i < N; ++i) {
                double acc = 0.0;
                for (int j = 0; j < s; ++j) acc += kA[s][j] * step.k[j][i];
                ys[i] += step.h * acc;
            }
            step.k[s] = rhs(t + kC[s] * step.h, ys);
            stage_ok = detail::finite(step.k[s]);
        }
        Vec<N> ynew = y;
        if (stage_ok) {
            for (std::size_t i = 0; i < N; ++i) {
                double acc = 0.0;
                for (int s = 0; s < 6; ++s) acc += kB[s] * step.k[s][i];
                ynew[i] += step.h * acc;
            }
            stage_ok = detail::finite(ynew);
        }
        if (stage_ok) {
            step.k[6] = rhs(t + step.h, ynew);
            stage_ok = detail::finite(step.k[6]);
        }
        if (!stage_ok) {
            ++out.rejected;
            h *= 0.25;
            if (h < min_step) {
                out.reason = Termination::NonFiniteState;
                return out;
            }
            continue;
        }

        Vec<N> err{};
        for (std::size_t i = 0; i < N; ++i) {
            double acc = 0.0;
            for (int s = 0; s < 7; ++s) acc += kE[s] * step.k[s][i];
            err[i] = step.h * acc / scale_of(y, ynew, i);
        }
        const double en = norm(err);
        if (!(en <= 1.0)) {
            ++out.rejected;
            h *= std::max(kMinFactor, kSafety * std::pow(en, -0.2));
            continue;
        }

        ++out.steps;
        step.y1 = ynew;
        const double tnew = step.t1();

        // Event scan on the dense output.
        std::optional<EventRecord<N>> stop;
        std::vector<EventRecord<N>> found;
        if (ne > 0) {
            constexpr int kSub = 8;
            for (std::size_t e = 0; e < ne; ++e) {
                const auto& ev = events[e];
                double ta = t;
                double fa = ev_prev[e];
                for (int j = 1; j <= kSub; ++j) {
                    const double tb = j == kSub ? tnew : t + step.h * (static_cast<double>(j) / kSub);
                    const Vec<N> yb = j == kSub ? ynew : step.at(tb);
                    const double fb = ev.fn(tb, yb);
                    if (detail::crossed(fa, fb, ev.direction)) {
                        const double tr = detail::refine(step, ev.fn, ta, fa, tb, fb, cfg.event_tol);
                        const Vec<N> yr = tr == tnew ? ynew : step.at(tr);
                        bool term = ev.terminal || (ev.stop_if && ev.stop_if(tr, yr));
                        found.push_back(EventRecord<N>{ev.kind, e, tr, yr, term});
                        if (term) break;
                    }
                    ta = tb;
                    fa = fb;
                }
            }
            std::sort(found.begin(), found.end(), [&](const auto& a, const auto& b) {
                return dir * a.location < dir * b.location;
            });
            for (std::size_t i = 0; i < found.size(); ++i) {
                if (found[i].terminal) {
                    stop = found[i];
                    found.resize(i + 1);
                    break;
                }
            }
        }

        const double tend = stop ? stop->location : tnew;
        if (cfg.max_sample_spacing > 0.0) {
            const double len = std::abs(tend - t);
            const auto pieces = static_cast<long>(std::ceil(len / cfg.max_sample_spacing));
            for (long j = 1; j < pieces; ++j) {
                const double ts = t + (tend - t) * (static_cast<double>(j) / static_cast<double>(pieces));
                out.t.push_back(ts);
                out.y.push_back(step.at(ts));
            }
        }
        for (auto& r : found) out.events.push_back(r);
        if (stop) {
            if (stop->location != t) {
                out.t.push_back(stop->location);
                out.y.push_back(stop->state);
            }
            out.reason = Termination::TerminalEvent;
            return out;
        }
        out.t.push_back(tnew);
        out.y.push_back(ynew);
        for (std::size_t e = 0; e < ne; ++e) ev_prev[e] = events[e].fn(tnew, ynew);

        t = tnew;
        y = ynew;
        f0 = step.k[6];
        const double factor = en == 0.0 ? kMaxFactor : std::min(kMaxFactor, kSafety * std::pow(en, -0.2));
        h *= std::max(kMinFactor, factor);
    }
    out.reason = Termination::Completed;
    return out;
}

template <std::size_t N, class Rhs>
Trajectory<N> integrate(Rhs&& rhs, const Vec<N>& y0, double t0, double t1, const IntegratorConfig& cfg) {
    return integrate<N>(std::forward<Rhs>(rhs), y0, t0, t1, std::span<const Event<N>>{}, cfg);
}

}  // namespace blowup
