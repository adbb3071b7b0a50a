#include <catch_amalgamated.hpp>

#include <cmath>
#include <numbers>

#include "blowup/analysis.hpp"
#include "blowup/shooting.hpp"

using namespace blowup;
using Catch::Approx;

namespace {
constexpr double kTwoPi = 2.0 * std::numbers::pi;
}

TEST_CASE("interface series") {
    const Params p(2.0, 0.3);
    const double eps = 1e-3;
    const auto [g, dg] = interface_series(p, eps);
    // f^(1/2) = C eps with C = h0/(2 sqrt 2) at m = 2
    const double C = p.h0() / (2.0 * std::sqrt(2.0));
    CHECK(g == Approx(std::pow(C * eps, 4.0)));
    CHECK(dg == Approx(-4.0 * C * std::pow(C * eps, 3.0)));
}

TEST_CASE("forward shot at sigma=0 from the explicit amplitude ends at its interface") {
    const auto r = shoot_forward(Params(2.0, 0.0), 4.0 / 3.0, 1e3);
    const auto* in = std::get_if<outcome::Interface>(&r.outcome);
    REQUIRE(in);
    CHECK(in->xi0 == Approx(kTwoPi).margin(1e-6));
    CHECK(r.profile.interface().value() == in->xi0);
    CHECK(count_maxima(r.profile) == 1);
    CHECK(integral_identity_residual(r.profile, r.profile.xi_end()) < 1e-6);
    for (double m : {1.5, 3.0}) {
        const auto q = shoot_forward(Params(m, 0.0), explicit_F0_amplitude(m), 1e3);
        const auto* i2 = std::get_if<outcome::Interface>(&q.outcome);
        REQUIRE(i2);
        CHECK(i2->xi0 == Approx(explicit_F0_interface(m)).margin(1e-5));
    }
}

TEST_CASE("forward shot from the constant solution is exhausted") {
    ShotConfig c;
    c.sample_spacing = 1.0;
    const auto r = shoot_forward(Params(2.0, 0.0), 1.0, 1e3, c);
    CHECK(std::holds_alternative<outcome::Exhausted>(r.outcome));
    CHECK(r.profile.xi_end() == 1e3);
    for (const auto& s : r.profile.samples()) CHECK(s.g == Approx(1.0).margin(1e-12));
    CHECK(count_maxima(r.profile) == 0);
}

TEST_CASE("forward shot with a large start vanishes with vertical slope") {
    const auto r = shoot_forward(Params(2.0, 0.5), 3.0, 1e3);
    const auto* v = std::get_if<outcome::VerticalSlope>(&r.outcome);
    REQUIRE(v);
    CHECK(v->xi0 > 0.0);
    CHECK(v->xi0 < 10.0);
    CHECK(integral_identity_residual(r.profile, r.profile.xi_end()) < 1e-6);
}

TEST_CASE("forward shot preconditions") {
    CHECK_THROWS_AS(shoot_forward(Params(2.0, 0.5), 0.0, 10.0), DomainError);
    CHECK_THROWS_AS(shoot_forward(Params(2.0, 0.5), 1.0, -1.0), DomainError);
}

TEST_CASE("backward shot from the explicit interface recovers the explicit profile") {
    const auto r = shoot_backward(Params(2.0, 0.0), kTwoPi);
    const auto* o = std::get_if<outcome::ReachedOrigin>(&r.outcome);
    REQUIRE(o);
    CHECK(o->f0 == Approx(4.0 / 3.0).margin(1e-8));
    CHECK(o->slope == Approx(0.0).margin(1e-6));
    for (double x : {1.0, 3.0, 5.0, 6.0}) {
        CHECK(f_from_g(r.profile.params(), r.profile.at(x).g) == Approx(explicit_profile_F0(2.0, x)).margin(1e-7));
    }
    CHECK(r.profile.interface().value() == kTwoPi);
    CHECK(r.profile.samples().back().xi == kTwoPi);
    CHECK(integral_identity_residual(r.profile, kTwoPi) < 1e-8);
}

TEST_CASE("backward shot from a shorter interface misses the explicit profile") {
    const auto r = shoot_backward(Params(2.0, 0.0), std::numbers::pi * std::sqrt(2.0));
    const auto* o = std::get_if<outcome::ReachedOrigin>(&r.outcome);
    REQUIRE(o);
    CHECK(std::abs(o->f0 - 4.0 / 3.0) > 0.1);
    CHECK(o->slope < -0.1);
}

TEST_CASE("backward shots past one period at sigma=0 vanish before the axis") {
    const auto r = shoot_backward(Params(2.0, 0.0), 14.0);
    CHECK_FALSE(std::holds_alternative<outcome::ReachedOrigin>(r.outcome));
    CHECK_THROWS_AS(slope_fn(Params(2.0, 0.0), 14.0), NumericalError);
}

TEST_CASE("backward shot preconditions") {
    CHECK_THROWS_AS(shoot_backward(Params(2.0, 0.5), 0.0, 1e-6), DomainError);
    CHECK_THROWS_AS(shoot_backward(Params(2.0, 0.5), 1.0, 0.0), DomainError);
    CHECK_THROWS_AS(shoot_backward(Params(2.0, 0.5), 1.0, 0.9), DomainError);
    CHECK_THROWS_AS(slope_fn(Params(2.0, 0.5), -1.0), DomainError);
}

TEST_CASE("slope function: halving check and signs") {
    const Params p(2.0, 0.1);
    const auto e = try_slope(p, 9.0);
    CHECK(e.reliable);
    CHECK(std::abs(e.slope - e.slope_half) <= 1e-4 * (1 + std::abs(e.slope)));
    CHECK(slope_fn(p, 9.0) > 0.0);
    CHECK(slope_fn(p, 12.0) < 0.0);
    CHECK(slope_fn(p, 16.0) > 0.0);
    CHECK(slope_fn(Params(2.0, 0.0), kTwoPi) == Approx(0.0).margin(1e-4));
    for (double x : {0.5, 3.0, 10.0, 20.0}) CHECK(slope_fn(Params(2.0, 4.0), x) < 0.0);
}

TEST_CASE("good profiles at sigma=0: exactly the explicit one") {
    const auto r = find_good_profiles(Params(2.0, 0.0), 3.0, 8.0, 33);
    REQUIRE(r.profiles.size() == 1);
    const auto& g = r.profiles.front();
    CHECK(g.xi0 == Approx(kTwoPi).margin(1e-3));
    CHECK(g.a == Approx(4.0 / 3.0).margin(1e-4));
    CHECK(g.n_max == 1);
}

TEST_CASE("good profiles satisfy their invariants") {
    const Params p(2.0, 0.1);
    const auto r = find_good_profiles(p, 5.0, 20.0, 61);
    REQUIRE(r.profiles.size() >= 3);
    for (const auto& g : r.profiles) {
        CHECK(std::abs(g.slope) < 1e-6);
        CHECK(g.profile.samples().back().xi == g.xi0);
        CHECK(g.profile.at(g.xi0).g == 0.0);
        CHECK(g.profile.at(g.xi0).dg == 0.0);
        CHECK(g.n_max >= 1);
        CHECK(g.n_max == count_maxima(g.profile));
        for (double x : g.profile.maxima()) {
            const double f = f_from_g(p, g.profile.at(x).g);
            CHECK(f >= hyperbola_equilibrium(p, x) * (1 - 1e-8));
        }
        CHECK(integral_identity_residual(g.profile, g.xi0) < 1e-6);
        CHECK(g.residual < 1e-6);
    }
    for (std::size_t i = 1; i < r.profiles.size(); ++i) CHECK(r.profiles[i].xi0 - r.profiles[i - 1].xi0 > 1e-6);
}

TEST_CASE("grid evaluation is independent of the thread count") {
    const Params p(2.0, 0.1);
    ShotConfig one, many;
    one.threads = 1;
    many.threads = 3;
    const auto a = find_good_profiles(p, 8.0, 16.0, 17, one);
    const auto b = find_good_profiles(p, 8.0, 16.0, 17, many);
    REQUIRE(a.profiles.size() == b.profiles.size());
    for (std::size_t i = 0; i < a.profiles.size(); ++i) CHECK(a.profiles[i].xi0 == b.profiles[i].xi0);
    for (std::size_t i = 0; i < a.grid.size(); ++i) CHECK(a.grid[i].slope == b.grid[i].slope);
}

TEST_CASE("no good profiles inside the non-existence gap") {
    for (auto [m, s] : {std::pair{2.0, 4.0}, {3.0, 6.0}}) {
        const Params p(m, s);
        REQUIRE(nonexistence_gap(p).gap);
        const auto r = find_good_profiles(p, 0.25, 10.0, 40);
        CHECK(r.profiles.empty());
        CHECK(r.unreliable == 0);
    }
}

TEST_CASE("find_good_profiles preconditions") {
    const Params p(2.0, 0.1);
    CHECK_THROWS_AS(find_good_profiles(p, 0.0, 1.0, 5), DomainError);
    CHECK_THROWS_AS(find_good_profiles(p, 2.0, 1.0, 5), DomainError);
    CHECK_THROWS_AS(find_good_profiles(p, 1.0, 2.0, 1), DomainError);
}

TEST_CASE("count_maxima on tabulated profiles") {
    const Params p(2.0, 0.0);
    std::vector<ProfileState> s;
    const double L = kTwoPi;
    for (int i = 0; i <= 200; ++i) {
        const double x = L * i / 200;
        const double f = explicit_profile_F0(2.0, x);
        s.push_back({x, f * f, 2.0 * f * explicit_profile_F0_prime(2.0, x)});
    }
    const Profile f0(p, s, Tabulated{});
    CHECK(count_maxima(f0) == 1);
    const Profile flat(p, {{0.0, 1.0, 0.0}, {5.0, 1.0, 0.0}}, Tabulated{});
    CHECK(count_maxima(flat) == 0);
}

TEST_CASE("multiplicity scan") {
    const auto rows = multiplicity_scan(2.0, {0.1, 0.0}, 20.0, 81);
    REQUIRE(rows.size() == 2);
    CHECK(rows[0].sigma == 0.0);
    CHECK(rows[1].sigma == 0.1);
    REQUIRE(rows[0].count() >= 1);
    CHECK(rows[0].xi0[0] == Approx(kTwoPi).margin(1e-3));
    CHECK(rows[1].count() >= 4);
    for (std::size_t i = 1; i < rows[1].count(); ++i) CHECK(rows[1].xi0[i] > rows[1].xi0[i - 1]);
    CHECK(multiplicity_scan(2.0, {0.0}, 6.0, 33)[0].count() == 0);
    CHECK(multiplicity_scan(2.0, {4.0}, 20.0, 21)[0].count() == 0);
}

TEST_CASE("non-existence gap values") {
    const auto g = nonexistence_gap(Params(2.0, 4.0));
    CHECK(g.xi_plus == Approx(std::pow(48.0 / 5.0, 1.0 / 6.0)).epsilon(1e-14));
    CHECK(g.xi_minus == Approx(std::pow(12.0, 1.0 / 6.0)).epsilon(1e-14));
    CHECK(g.gap);
    CHECK(g.sigma_threshold == Approx(4.0 * std::sqrt(0.8)));
    CHECK(g.sigma_threshold == Approx(3.57771).margin(1e-5));
    CHECK_FALSE(nonexistence_gap(Params(2.0, 1.0)).gap);
    CHECK_THROWS_AS(nonexistence_gap(Params(2.0, 0.0)), DomainError);
    for (int i = 0; i < 10; ++i) {
        for (int j = 0; j < 10; ++j) {
            const double m = 1.05 + 0.5 * i, s = 0.3 + 1.3 * j;
            CHECK(nonexistence_gap(Params(m, s)).gap == (s * s > 8 * m * m * m / (2 * m + 1)));
        }
    }
}

TEST_CASE("P2 orbit stays above its lower bound up to the first crossing") {
    for (double m : {2.0, 3.0}) {
        for (double s : {0.25, 1.0, 4.0, 6.0}) {
            const auto b = p2_lower_bound_check(Params(m, s));
            CHECK(b.ok);
            if (b.crossing) CHECK(*b.crossing <= b.limit + 1e-8);
        }
    }
}

TEST_CASE("backward shots respect the upper bound at their last crossing") {
    for (double m : {2.0, 3.0}) {
        for (double s : {0.5, 4.0, 6.0}) {
            for (double xi0 : {0.5, 1.5, 3.0, 8.0}) {
                const auto b = backward_bound_check(Params(m, s), xi0);
                CHECK(b.ok);
            }
        }
    }
}

TEST_CASE("P2 orbit profile starts on the series") {
    const Params p(2.0, 1.0);
    const auto r = p2_orbit_profile(p, 3.0);
    const auto& s0 = r.profile.samples().front();
    CHECK(f_from_g(p, s0.g) == Approx(s0.xi * s0.xi / 12.0).epsilon(1e-12));
    CHECK(integral_identity_residual(r.profile, 2.0) < 1e-8);
}
