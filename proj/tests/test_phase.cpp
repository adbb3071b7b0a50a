#include <catch_amalgamated.hpp>

#include <cmath>
#include <complex>
#include <algorithm>
#include <random>

#include "blowup/phase.hpp"

using namespace blowup;
using Catch::Approx;
using cd = std::complex<double>;

TEST_CASE("main field at a hand-computed point") {
    const Params p(2.0, 1.0);
    const auto v = vf_main(p, PhaseState{1.0, 1.0, 1.0});
    CHECK(v[0] == Approx(-0.5));
    CHECK(v[1] == Approx(-1.5));
    CHECK(v[2] == Approx(2.0));
    const auto a = vf_alt(p, AltPhaseState{1.0, 1.0, 4.0});
    CHECK(a[0] == Approx(2.0));
    CHECK(a[1] == Approx(-2.0 + 1.0 - 4.0));
    CHECK(a[2] == Approx(2.0));
}

TEST_CASE("to_phase at a hand-computed point") {
    const Params p(2.0, 1.0);
    const auto s = to_phase(p, 2.0, 4.0, 1.0);
    // sqrt(2) f^(1/2)/xi, sqrt(2) f^(-1/2) f', xi f
    CHECK(s.X == Approx(std::sqrt(2.0)));
    CHECK(s.Y == Approx(std::sqrt(2.0) / 2.0));
    CHECK(s.Z == Approx(8.0));
    const auto t = to_phase_from_g(p, 2.0, 16.0, 8.0);
    CHECK(t.X == Approx(s.X));
    CHECK(t.Y == Approx(s.Y));
    CHECK(t.Z == Approx(s.Z));
    CHECK_THROWS_AS(to_phase(p, 0.0, 1.0, 0.0), DomainError);
    CHECK_THROWS_AS(to_phase(p, 1.0, 0.0, 0.0), DomainError);
}

TEST_CASE("profile solutions map onto orbits of the main system") {
    // d/dxi of the phase image is parallel to the field.
    const Params p(2.0, 0.7);
    auto rhs = [&](double xi, const Vec<2>& y) { return Vec<2>{y[1], rhs_g(p, xi, y[0])}; };
    IntegratorConfig c;
    c.rel_tol = 1e-12;
    c.abs_tol = 1e-14;
    c.max_sample_spacing = 0.05;
    const auto tr = integrate<2>(rhs, Vec<2>{2.0, 0.3}, 0.5, 2.0, c);
    for (std::size_t i = 1; i + 1 < tr.t.size(); i += 5) {
        const double h = 1e-5;
        auto at = [&](double x) {
            const auto y = integrate<2>(rhs, tr.y[i], tr.t[i], x, c).y.back();
            return to_phase_from_g(p, x, y[0], y[1]);
        };
        const auto a = at(tr.t[i] - h), b = at(tr.t[i] + h);
        const Vec<3> d{(b.X - a.X) / (2 * h), (b.Y - a.Y) / (2 * h), (b.Z - a.Z) / (2 * h)};
        const auto v = vf_main(p, to_phase_from_g(p, tr.t[i], tr.y[i][0], tr.y[i][1]));
        const Vec<3> cr{d[1] * v[2] - d[2] * v[1], d[2] * v[0] - d[0] * v[2], d[0] * v[1] - d[1] * v[0]};
        const double nd = std::sqrt(d[0] * d[0] + d[1] * d[1] + d[2] * d[2]);
        const double nv = std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]);
        CHECK(std::sqrt(cr[0] * cr[0] + cr[1] * cr[1] + cr[2] * cr[2]) / (nd * nv) < 1e-6);
    }
}

TEST_CASE("Jacobian agrees with finite differences") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> U(-2.0, 2.0);
    for (int k = 0; k < 20; ++k) {
        const Params p(1.5 + std::abs(U(rng)), std::abs(U(rng)));
        const PhaseState s{U(rng), U(rng), U(rng)};
        const auto J = jacobian_main(p, s);
        const double h = 1e-6;
        for (int j = 0; j < 3; ++j) {
            Vec<3> a = s.vec(), b = s.vec();
            a[j] -= h;
            b[j] += h;
            const auto fa = vf_main(p, PhaseState::from(a));
            const auto fb = vf_main(p, PhaseState::from(b));
            for (int i = 0; i < 3; ++i) CHECK(J(i, j) == Approx((fb[i] - fa[i]) / (2 * h)).margin(1e-7));
        }
    }
}

TEST_CASE("catalog eigenvalues match the Jacobian at finite points") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> um(1.05, 6.0), us(0.0, 6.0);
    for (int k = 0; k < 50; ++k) {
        const Params p(um(rng), us(rng));
        for (const auto& cp : critical_points(p)) {
            if (!cp.finite()) continue;
            const auto v = vf_main(p, cp.state());
            for (double x : v) CHECK(x == Approx(0.0).margin(1e-14));
            auto ref = cp.eigenvalues;
            std::sort(ref.begin(), ref.end(), [](cd a, cd b) {
                return a.real() != b.real() ? a.real() < b.real() : a.imag() < b.imag();
            });
            const auto num = eigenvalues(jacobian_main(p, cp.state()));
            for (int i = 0; i < 3; ++i) CHECK(std::abs(num[i] - ref[i]) < 1e-10 * std::max(1.0, std::abs(ref[i])));
        }
    }
}

TEST_CASE("catalog at m=2, sigma=1") {
    const Params p(2.0, 1.0);
    const auto pts = critical_points(p);
    REQUIRE(pts.size() == 9);
    const auto p3 = critical_point(p, PointLabel::P3);
    CHECK(p3.kind == PointKind::Nonhyperbolic);
    CHECK(std::abs(p3.eigenvalues[1] - cd(0.0, 1.0)) < 1e-15);
    CHECK(std::abs(p3.eigenvalues[2] - cd(0.0, -1.0)) < 1e-15);
    CHECK(critical_point(p, PointLabel::Q4).eigenvalues.empty());
    CHECK(critical_point(p, PointLabel::Q3).kind == PointKind::StableNode);
    CHECK(critical_point(p, PointLabel::Q2).kind == PointKind::UnstableNode);
    CHECK(critical_point(p, PointLabel::P0).kind == PointKind::Saddle2u1s);
    CHECK(critical_point(p, PointLabel::P2).expansion == Expansion::BehP2);
    // kinds follow the signs of the eigenvalues
    for (const auto& cp : pts) {
        if (cp.eigenvalues.empty() || cp.kind == PointKind::Nonhyperbolic) continue;
        int pos = 0;
        for (auto e : cp.eigenvalues) pos += e.real() > 0;
        if (cp.kind == PointKind::Saddle2u1s) CHECK(pos == 2);
        if (cp.kind == PointKind::Saddle1u2s) CHECK(pos == 1);
        if (cp.kind == PointKind::UnstableNode) CHECK(pos == 3);
        if (cp.kind == PointKind::StableNode) CHECK(pos == 0);
    }
}

TEST_CASE("P2 outgoing eigenvector") {
    for (double m : {1.5, 2.0, 4.0}) {
        for (double s : {0.0, 0.5, 3.0}) {
            const Params p(m, s);
            const auto cp = critical_point(p, PointLabel::P2);
            const auto J = jacobian_main(p, cp.state());
            const auto e = p2_unstable_eigenvector(p);
            const Eigen::Vector3d v(e[0], e[1], e[2]);
            const Eigen::Vector3d r = J * v - cp.eigenvalues[2].real() * v;
            CHECK(r.norm() < 1e-12 * v.norm());
        }
    }
}

TEST_CASE("cylinder flux identity on the cylinder") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    for (int k = 0; k < 10000; ++k) {
        const Params p(1.1 + 4.0 * U(rng), 5.0 * U(rng));
        const double m = p.m();
        const double Y = (2.0 * U(rng) - 1.0) * p.h0();
        const PhaseState s{4.0 * U(rng), Y, 2.0 * m / (m + 1.0) - m * Y * Y};
        const double flux = cylinder_flux(p, s);
        CHECK(flux == Approx(p.sigma() * s.X * s.Z / m).margin(1e-12));
        // and it is the derivative of cylinder_value along the flow
        const auto v = vf_main(p, s);
        CHECK(2.0 * Y * v[1] + v[2] / m == Approx(flux).margin(1e-12));
    }
    CHECK_THROWS_AS(cylinder_flux(Params(2.0, 1.0), PhaseState{0.0, 0.0, 0.0}), DomainError);
}

TEST_CASE("X = 0 first integral is conserved") {
    for (double s : {0.0, 1.5}) {
        const Params p(2.5, s);
        IntegratorConfig c;
        c.rel_tol = 1e-12;
        c.abs_tol = 1e-14;
        const PhaseState s0{0.0, 0.3, 0.8};
        const auto o = integrate_main(p, s0, 20.0, {}, c);
        const double K0 = x0_first_integral(p, s0.Y, s0.Z);
        for (const auto& q : o.states) {
            CHECK(q.X == 0.0);
            CHECK(x0_first_integral(p, q.Y, q.Z) == Approx(K0).margin(1e-9));
        }
    }
    // zero on the cylinder
    const Params p(2.0, 0.0);
    CHECK(x0_first_integral(p, 0.5, 2.0 * 2.0 / 3.0 - 2.0 * 0.25) == Approx(0.0).margin(1e-15));
}

TEST_CASE("normal form at m=2, sigma=1") {
    const auto n = normal_form_p3(Params(2.0, 1.0));
    CHECK(n.G200 == -3.0);
    CHECK(n.G011 == 0.0);
    CHECK(n.G111 == 0.0);
    CHECK(n.G300 == 0.0);
    CHECK(n.H110 == Approx(7.0 / 4.0));
    CHECK(std::abs(n.H210 - cd(0.0, -49.0 / 32.0)) < 1e-14);
    CHECK(std::abs(n.H021 - cd(0.0, -35.0 / 48.0)) < 1e-14);
    CHECK_THROWS_AS(normal_form_p3(Params(2.0, 0.0)), DomainError);
}

TEST_CASE("Taylor coefficients: closed forms against the field") {
    for (int i = 0; i < 10; ++i) {
        for (int j = 0; j < 10; ++j) {
            const Params p(1.2 + 0.5 * i, 0.1 + 0.45 * j);
            const auto a = taylor_coefficients_p3(p);
            const auto b = taylor_coefficients_from_field(p);
            auto close = [](cd x, cd y) { return std::abs(x - y) <= 1e-12 * std::max(1.0, std::abs(x)); };
            CHECK(close(a.g200, b.g200));
            CHECK(close(a.g110, b.g110));
            CHECK(close(a.g101, b.g101));
            CHECK(close(a.g020, b.g020));
            CHECK(close(a.g002, b.g002));
            CHECK(close(a.g011, b.g011));
            CHECK(close(a.h200, b.h200));
            CHECK(close(a.h110, b.h110));
            CHECK(close(a.h101, b.h101));
            CHECK(close(a.h020, b.h020));
            CHECK(close(a.h002, b.h002));
            CHECK(close(a.h011, b.h011));
            const auto n = normal_form_p3(p);
            CHECK(n.G200 == Approx(-(p.sigma() + 2.0)));
        }
    }
}

TEST_CASE("spiral around P3 grows and escapes towards Y -> -infinity") {
    const auto rep = p3_spiral_diagnostic(Params(2.0, 1.0), {0.05, 0.01, 1.01}, 100);
    CHECK(rep.radii.size() >= 5);
    CHECK(rep.strictly_increasing());
    CHECK(rep.escaped);
    CHECK(rep.final_state.Y < 0.0);
}

TEST_CASE("on X = 0 the section distances stay constant") {
    IntegratorConfig c;
    c.rel_tol = 1e-12;
    c.abs_tol = 1e-14;
    const auto rep = p3_spiral_diagnostic(Params(2.0, 1.0), {0.0, 0.01, 1.01}, 8, c, 200.0);
    REQUIRE(rep.radii.size() >= 5);
    for (double r : rep.radii) CHECK(r == Approx(rep.radii.front()).epsilon(1e-7));
    CHECK_FALSE(rep.escaped);
}

TEST_CASE("spiral diagnostic preconditions") {
    CHECK_THROWS_AS(p3_spiral_diagnostic(Params(2.0, 1.0), {-0.1, 0.0, 1.0}, 5), DomainError);
    CHECK_THROWS_AS(p3_spiral_diagnostic(Params(2.0, 1.0), {0.1, 0.0, 1.0}, 1), DomainError);
}
