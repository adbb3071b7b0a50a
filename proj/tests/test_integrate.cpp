#include <catch_amalgamated.hpp>

#include <cmath>
#include <numbers>
#include <vector>

#include "blowup/integrate.hpp"

using namespace blowup;
using Catch::Approx;

namespace {
auto decay = [](double, const Vec<1>& y) { return Vec<1>{-y[0]}; };
auto oscillator = [](double, const Vec<2>& y) { return Vec<2>{y[1], -y[0]}; };
}  // namespace

TEST_CASE("exponential decay to e^-1") {
    const auto tr = integrate<1>(decay, Vec<1>{1.0}, 0.0, 1.0, IntegratorConfig{});
    REQUIRE(tr.reason == Termination::Completed);
    CHECK(tr.t.back() == 1.0);
    CHECK(tr.y.back()[0] == Approx(std::exp(-1.0)).epsilon(1e-9));
    CHECK(tr.ok());
}

TEST_CASE("terminal event at the first zero of cos") {
    std::vector<Event<2>> ev{{EventKind::GZero, Direction::Falling, true, [](double, const Vec<2>& y) { return y[0]; }}};
    const auto tr = integrate<2>(oscillator, Vec<2>{1.0, 0.0}, 0.0, 10.0, ev, IntegratorConfig{});
    REQUIRE(tr.reason == Termination::TerminalEvent);
    const auto te = tr.terminal_event();
    REQUIRE(te.has_value());
    CHECK(te->location == Approx(std::numbers::pi / 2).margin(1e-10));
    CHECK(tr.t.back() == te->location);
    CHECK(te->state[1] == Approx(-1.0).epsilon(1e-9));
}

TEST_CASE("event direction filters crossings") {
    std::vector<Event<2>> ev{{EventKind::DgZero, Direction::Rising, false, [](double, const Vec<2>& y) { return y[0]; }},
                             {EventKind::DgZero, Direction::Falling, false, [](double, const Vec<2>& y) { return y[0]; }}};
    const auto tr = integrate<2>(oscillator, Vec<2>{1.0, 0.0}, 0.0, 4.0 * std::numbers::pi, ev, IntegratorConfig{});
    int rising = 0, falling = 0;
    for (const auto& r : tr.events) (r.index == 0 ? rising : falling)++;
    CHECK(rising == 2);
    CHECK(falling == 2);
    for (std::size_t i = 1; i < tr.events.size(); ++i) CHECK(tr.events[i].location > tr.events[i - 1].location);
}

TEST_CASE("events are ordered along a backward integration") {
    std::vector<Event<2>> ev{{EventKind::DgZero, Direction::Any, false, [](double, const Vec<2>& y) { return y[0]; }}};
    const auto tr = integrate<2>(oscillator, Vec<2>{1.0, 0.0}, 0.0, -7.0, ev, IntegratorConfig{});
    REQUIRE(tr.events.size() == 2);
    CHECK(tr.events[0].location == Approx(-std::numbers::pi / 2).margin(1e-10));
    CHECK(tr.events[1].location == Approx(-3 * std::numbers::pi / 2).margin(1e-10));
}

TEST_CASE("stop_if turns a recording event into a stop") {
    int count = 0;
    std::vector<Event<2>> ev{{EventKind::DgZero, Direction::Any, false, [](double, const Vec<2>& y) { return y[0]; },
                              [&count](double, const Vec<2>&) { return ++count == 3; }}};
    const auto tr = integrate<2>(oscillator, Vec<2>{1.0, 0.0}, 0.0, 100.0, ev, IntegratorConfig{});
    REQUIRE(tr.reason == Termination::TerminalEvent);
    CHECK(tr.t.back() == Approx(2.5 * std::numbers::pi).margin(1e-9));
}

TEST_CASE("self-convergence with tightening tolerance") {
    auto run = [](double tol) {
        IntegratorConfig c;
        c.rel_tol = tol;
        c.abs_tol = tol * 1e-2;
        return integrate<2>(oscillator, Vec<2>{1.0, 0.0}, 0.0, 20.0, c).y.back()[0];
    };
    const double exact = std::cos(20.0);
    const double e6 = std::abs(run(1e-6) - exact);
    const double e9 = std::abs(run(1e-9) - exact);
    const double e12 = std::abs(run(1e-12) - exact);
    CHECK(e9 < e6);
    CHECK(e12 < e9);
    CHECK(e12 < 1e-10);
}

TEST_CASE("forward then backward returns to the start") {
    auto rhs = [](double t, const Vec<2>& y) { return Vec<2>{y[1], -std::sin(y[0]) + 0.1 * std::cos(t)}; };
    IntegratorConfig c;
    c.rel_tol = 1e-12;
    c.abs_tol = 1e-14;
    const Vec<2> y0{0.7, -0.2};
    const auto fw = integrate<2>(rhs, y0, 0.0, 5.0, c);
    const auto bw = integrate<2>(rhs, fw.y.back(), 5.0, 0.0, c);
    CHECK(bw.y.back()[0] == Approx(y0[0]).margin(1e-9));
    CHECK(bw.y.back()[1] == Approx(y0[1]).margin(1e-9));
}

TEST_CASE("dense samples respect the spacing and match the solution") {
    IntegratorConfig c;
    c.max_sample_spacing = 0.05;
    const auto tr = integrate<2>(oscillator, Vec<2>{1.0, 0.0}, 0.0, 6.0, c);
    for (std::size_t i = 1; i < tr.t.size(); ++i) {
        CHECK(tr.t[i] - tr.t[i - 1] <= 0.05 + 1e-12);
        CHECK(tr.y[i][0] == Approx(std::cos(tr.t[i])).margin(1e-8));
    }
}

TEST_CASE("finite-time blow-up is reported, not hidden") {
    auto rhs = [](double, const Vec<1>& y) { return Vec<1>{y[0] * y[0]}; };
    const auto tr = integrate<1>(rhs, Vec<1>{1.0}, 0.0, 2.0, IntegratorConfig{});
    CHECK_FALSE(tr.ok());
    CHECK(tr.t.back() < 1.0);
    CHECK(tr.t.back() > 0.99);
}

TEST_CASE("step budget") {
    IntegratorConfig c;
    c.max_steps = 5;
    const auto tr = integrate<2>(oscillator, Vec<2>{1.0, 0.0}, 0.0, 100.0, c);
    CHECK(tr.reason == Termination::MaxStepsExceeded);
}

TEST_CASE("invalid setup throws") {
    IntegratorConfig c;
    c.rel_tol = 0.0;
    CHECK_THROWS_AS(integrate<1>(decay, Vec<1>{1.0}, 0.0, 1.0, c), DomainError);
    CHECK_THROWS_AS(integrate<1>(decay, Vec<1>{1.0}, 1.0, 1.0, IntegratorConfig{}), DomainError);
    CHECK_THROWS_AS(integrate<1>(decay, Vec<1>{NAN}, 0.0, 1.0, IntegratorConfig{}), DomainError);
}

TEST_CASE("initial step cap is honoured") {
    IntegratorConfig c;
    c.initial_step_cap = 1e-6;
    const auto tr = integrate<1>(decay, Vec<1>{1.0}, 0.0, 1.0, c);
    REQUIRE(tr.t.size() > 2);
    CHECK(tr.t[1] - tr.t[0] <= 1e-6);
}
