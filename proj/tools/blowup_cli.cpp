// blowup: command-line front end.
//
//   blowup profile --m 2 --sigma 0.1 --xi0 12 --out p.csv
//   blowup scan    --m 2 --sigma 0.1,0.2 --xi0-max 16 --grid 65
//   blowup phase   --m 2 --sigma 1 --start 0.05,0.01,1.01
//   blowup points  --m 2 --sigma 1
//   blowup bounds  --m 2 --sigma 4
//   blowup verify  [--seed 0]
//
// Exit codes: 0 ok, 2 usage, 3 numerical failure, 4 verification failure.

#include <CLI11.hpp>
#include <json.hpp>

#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "blowup/blowup.hpp"

namespace {

using nlohmann::ordered_json;
using namespace blowup;

enum Exit { kOk = 0, kUsage = 2, kNumerical = 3, kVerify = 4 };

struct Common {
    double m = 2.0;
    std::vector<double> sigma{0.0};
    std::string out;
    std::string format = "csv";
    double rel_tol = 1e-10;
    double abs_tol = 1e-12;
    int grid = 33;
    double xi0_max = 20.0;
    std::uint64_t seed = 0;
};

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// JSON numbers go through %.17g as well, so reruns are byte-identical.
ordered_json jnum(double x) {
    if (!std::isfinite(x)) return ordered_json(io::g17(x));
    return ordered_json::parse(io::g17(x));
}

ordered_json jnums(const std::vector<double>& v) {
    ordered_json a = ordered_json::array();
    for (double x : v) a.push_back(jnum(x));
    return a;
}

ShotConfig shot_config(const Common& c) {
    ShotConfig s;
    s.integrator.rel_tol = c.rel_tol;
    s.integrator.abs_tol = c.abs_tol;
    s.validate();
    return s;
}

double single_sigma(const Common& c) {
    if (c.sigma.size() != 1) throw UsageError("this command takes a single --sigma value");
    return c.sigma.front();
}

// Writes to --out, or stdout when no path was given.
void emit(const Common& c, const std::string& text, const std::string& path_override = {}) {
    const std::string path = path_override.empty() ? c.out : path_override;
    if (path.empty() || path == "-") {
        std::cout << text;
        return;
    }
    std::ofstream f(path, std::ios::binary);
    if (!f) throw UsageError("cannot open output file " + path);
    f << text;
}

ordered_json outcome_json(const ShotOutcome& o) {
    ordered_json j;
    j["kind"] = outcome_name(o);
    std::visit(
        [&](const auto& v) {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, outcome::Interface> || std::is_same_v<T, outcome::VerticalSlope>) {
                j["xi0"] = jnum(v.xi0);
            } else if constexpr (std::is_same_v<T, outcome::ReachedOrigin>) {
                j["f0"] = jnum(v.f0);
                j["slope"] = jnum(v.slope);
            } else if constexpr (std::is_same_v<T, outcome::Diverged>) {
                j["reason"] = v.reason;
            }
        },
        o);
    return j;
}

ordered_json profile_meta(const Profile& prof, const ShotOutcome& o) {
    ordered_json j;
    j["schema"] = "v1";
    j["m"] = jnum(prof.params().m());
    j["sigma"] = jnum(prof.params().sigma());
    j["outcome"] = outcome_json(o);
    j["maxima"] = jnums(prof.maxima());
    j["minima"] = jnums(prof.minima());
    j["n_max"] = count_maxima(prof);
    j["phi_max_crossings"] = jnums(prof.phi_max_crossings());
    j["interface"] = prof.interface() ? jnum(*prof.interface()) : ordered_json(nullptr);
    j["slope_at_origin"] = prof.slope_at_origin() ? jnum(*prof.slope_at_origin()) : ordered_json(nullptr);
    j["integral_identity_residual"] = jnum(integral_identity_residual(prof, prof.xi_end()));
    j["samples"] = prof.samples().size();
    return j;
}

int cmd_profile(const Common& c, std::optional<double> a, std::optional<double> xi0, std::optional<double> eps,
                double xi_max) {
    if (a.has_value() == xi0.has_value()) throw UsageError("profile needs exactly one of --a or --xi0");
    const Params p(c.m, single_sigma(c));
    const ShotConfig cfg = shot_config(c);
    const ShotResult r = a ? shoot_forward(p, *a, xi_max, cfg)
                           : shoot_backward(p, *xi0, eps.value_or(cfg.epsilon_rel * *xi0), cfg);
    ordered_json meta = profile_meta(r.profile, r.outcome);
    if (c.format == "json") {
        ordered_json rows = ordered_json::array();
        for (const auto& s : r.profile.samples()) rows.push_back({jnum(s.xi), jnum(s.g), jnum(s.dg)});
        meta["columns"] = {"xi", "g", "dg"};
        meta["data"] = rows;
        emit(c, meta.dump(2) + "\n");
    } else {
        std::ostringstream os;
        io::write_profile_csv(os, r.profile);
        emit(c, os.str());
        if (!c.out.empty() && c.out != "-") emit(c, meta.dump(2) + "\n", c.out + ".json");
    }
    if (std::holds_alternative<outcome::Diverged>(r.outcome)) {
        std::cerr << "blowup: " << describe(r.outcome) << "\n";
        return kNumerical;
    }
    return kOk;
}

int cmd_scan(const Common& c, double xi0_min) {
    const ShotConfig cfg = shot_config(c);
    ordered_json rows = ordered_json::array();
    std::ostringstream csv;
    csv << "sigma,count,xi0_list,n_max_list\n";
    bool failed = false;
    std::vector<ScanRow> table;
    if (xi0_min > 0) {
        for (double s : c.sigma) {
            ScanRow row{s, {}, {}, {}, 0, {}, {}};
            try {
                auto res = find_good_profiles(Params(c.m, s), xi0_min, c.xi0_max, c.grid, cfg);
                row.unreliable = res.unreliable;
                for (auto& g : res.profiles) {
                    row.xi0.push_back(g.xi0);
                    row.n_max.push_back(g.n_max);
                    row.a.push_back(g.a);
                    row.profiles.push_back(std::move(g));
                }
            } catch (const std::exception& e) {
                row.error = e.what();
            }
            table.push_back(std::move(row));
        }
        std::sort(table.begin(), table.end(), [](const auto& x, const auto& y) { return x.sigma < y.sigma; });
    } else {
        table = multiplicity_scan(c.m, c.sigma, c.xi0_max, c.grid, cfg);
    }
    for (const auto& row : table) {
        std::string xs, ns;
        for (std::size_t i = 0; i < row.count(); ++i) {
            xs += (i ? ";" : "") + io::g17(row.xi0[i]);
            ns += (i ? ";" : "") + std::to_string(row.n_max[i]);
        }
        csv << io::g17(row.sigma) << ',' << row.count() << ',' << xs << ',' << ns << '\n';
        ordered_json j;
        j["sigma"] = jnum(row.sigma);
        j["count"] = row.count();
        j["unreliable_evaluations"] = row.unreliable;
        j["error"] = row.error.empty() ? ordered_json(nullptr) : ordered_json(row.error);
        ordered_json gps = ordered_json::array();
        for (const auto& g : row.profiles) {
            ordered_json q;
            q["xi0"] = jnum(g.xi0);
            q["a"] = jnum(g.a);
            q["slope"] = jnum(g.slope);
            q["n_max"] = g.n_max;
            q["maxima"] = jnums(g.profile.maxima());
            q["integral_identity_residual"] = jnum(g.residual);
            gps.push_back(q);
        }
        j["profiles"] = gps;
        rows.push_back(j);
        if (!row.error.empty()) {
            failed = true;
            std::cerr << "blowup: sigma=" << row.sigma << ": " << row.error << "\n";
        }
    }
    if (c.format == "json") {
        ordered_json top;
        top["schema"] = "v1";
        top["m"] = jnum(c.m);
        top["xi0_max"] = jnum(c.xi0_max);
        top["grid"] = c.grid;
        top["rows"] = rows;
        emit(c, top.dump(2) + "\n");
    } else {
        emit(c, csv.str());
    }
    return failed ? kNumerical : kOk;
}

int cmd_phase(const Common& c, const std::vector<double>& start, double eta_max) {
    if (start.size() != 3) throw UsageError("--start needs X,Y,Z");
    const Params p(c.m, single_sigma(c));
    IntegratorConfig ic;
    ic.rel_tol = c.rel_tol;
    ic.abs_tol = c.abs_tol;
    const auto rep = orbit_report(p, {start[0], start[1], start[2]}, eta_max, ic);
    if (c.format == "json") {
        ordered_json j;
        j["schema"] = "v1";
        j["terminal"] = rep.terminal;
        ordered_json rows = ordered_json::array();
        for (std::size_t i = 0; i < rep.eta.size(); ++i) {
            const auto& s = rep.states[i];
            rows.push_back({jnum(rep.eta[i]), jnum(s.X), jnum(s.Y), jnum(s.Z), jnum(cylinder_value(p, s))});
        }
        j["columns"] = {"eta", "X", "Y", "Z", "cylinder_value"};
        j["data"] = rows;
        emit(c, j.dump(2) + "\n");
    } else {
        std::ostringstream os;
        io::write_orbit_csv(os, p, rep.eta, rep.states);
        emit(c, os.str());
    }
    if (!(rep.reason == Termination::Completed || rep.reason == Termination::TerminalEvent)) {
        std::cerr << "blowup: integration stopped: " << to_string(rep.reason) << "\n";
        return kNumerical;
    }
    return kOk;
}

int cmd_points(const Common& c) {
    const Params p(c.m, single_sigma(c));
    ordered_json pts = ordered_json::array();
    for (const auto& cp : critical_points(p)) {
        ordered_json j;
        j["label"] = to_string(cp.label);
        j["kind"] = to_string(cp.kind);
        j["expansion"] = to_string(cp.expansion);
        if (cp.finite()) {
            const auto& s = cp.state();
            j["coords"] = {jnum(s.X), jnum(s.Y), jnum(s.Z)};
        } else {
            const auto& d = std::get<InfinityDirection>(cp.coords).v;
            j["direction_at_infinity"] = {jnum(d[0]), jnum(d[1]), jnum(d[2]), jnum(d[3])};
        }
        ordered_json ev = ordered_json::array();
        for (const auto& e : cp.eigenvalues) ev.push_back({{"re", jnum(e.real())}, {"im", jnum(e.imag())}});
        j["eigenvalues"] = ev;
        pts.push_back(j);
    }
    ordered_json top;
    top["schema"] = "v1";
    top["m"] = jnum(p.m());
    top["sigma"] = jnum(p.sigma());
    top["points"] = pts;
    emit(c, top.dump(2) + "\n");
    return kOk;
}

int cmd_bounds(const Common& c) {
    const Params p(c.m, single_sigma(c));
    const auto g = nonexistence_gap(p);
    ordered_json j;
    j["schema"] = "v1";
    j["m"] = jnum(p.m());
    j["sigma"] = jnum(p.sigma());
    j["xi_plus"] = jnum(g.xi_plus);
    j["xi_minus"] = jnum(g.xi_minus);
    j["sigma_threshold"] = jnum(g.sigma_threshold);
    j["gap"] = g.gap;
    emit(c, j.dump(2) + "\n");
    return kOk;
}

int cmd_verify(const Common& c) {
    int failed = 0;
    verify::run_all(c.seed, [&](const verify::CheckResult& r) {
        std::cout << verify::format_line(r) << std::endl;
        if (!r.pass) ++failed;
    });
    std::cout << (failed == 0 ? "all checks passed" : std::to_string(failed) + " check(s) failed") << "\n";
    return failed == 0 ? kOk : kVerify;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Self-similar blow-up profiles of u_t = (u^m)_xx + |x|^sigma u^m"};
    app.require_subcommand(1);
    Common c;
    auto add_common = [&](CLI::App* s) {
        s->add_option("--m", c.m, "exponent m > 1")->capture_default_str();
        s->add_option("--sigma", c.sigma, "weight exponent(s) sigma >= 0")->delimiter(',')->capture_default_str();
        s->add_option("--out", c.out, "output path (default stdout)");
        s->add_option("--format", c.format, "csv or json")->check(CLI::IsMember({"csv", "json"}))->capture_default_str();
        s->add_option("--rel-tol", c.rel_tol)->capture_default_str();
        s->add_option("--abs-tol", c.abs_tol)->capture_default_str();
        s->add_option("--grid", c.grid, "sign-change grid points")->check(CLI::Range(2, 1000000))->capture_default_str();
        s->add_option("--xi0-max", c.xi0_max, "upper end of the xi0 window")->capture_default_str();
        s->add_option("--seed", c.seed, "seed for randomized sweeps")->capture_default_str();
    };

    std::optional<double> a, xi0, eps;
    double xi_max = 1e3;
    auto* profile = app.add_subcommand("profile", "forward (--a) or backward (--xi0) shot");
    add_common(profile);
    profile->add_option("--a", a, "f(0) for a forward shot");
    profile->add_option("--xi0", xi0, "interface for a backward shot");
    profile->add_option("--epsilon", eps, "backward start offset (default 1e-6 xi0)");
    profile->add_option("--xi-max", xi_max, "forward integration limit")->capture_default_str();

    double xi0_min = 0.0;
    auto* scan = app.add_subcommand("scan", "good profiles per sigma over (0, xi0-max]");
    add_common(scan);
    scan->add_option("--xi0-min", xi0_min, "lower end of a uniform window (default: grid xi0-max k/grid)");

    std::vector<double> start;
    double eta_max = 100.0;
    auto* phase = app.add_subcommand("phase", "orbit of the phase-space system");
    add_common(phase);
    phase->add_option("--start", start, "X,Y,Z")->delimiter(',')->required();
    phase->add_option("--eta-max", eta_max)->capture_default_str();

    auto* points = app.add_subcommand("points", "critical-point catalog (JSON)");
    add_common(points);
    auto* bounds = app.add_subcommand("bounds", "non-existence gap (JSON)");
    add_common(bounds);
    auto* verify = app.add_subcommand("verify", "run the acceptance checks");
    add_common(verify);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kOk : kUsage;
    }

    try {
        if (c.rel_tol <= 0 || c.abs_tol <= 0) throw UsageError("tolerances must be positive");
        if (*profile) return cmd_profile(c, a, xi0, eps, xi_max);
        if (*scan) {
            if (!(c.xi0_max > 0) || (xi0_min > 0 && !(xi0_min < c.xi0_max))) throw UsageError("invalid xi0 window");
            for (double s : c.sigma) Params(c.m, s);
            return cmd_scan(c, xi0_min);
        }
        if (*phase) return cmd_phase(c, start, eta_max);
        if (*points) return cmd_points(c);
        if (*bounds) return cmd_bounds(c);
        if (*verify) return cmd_verify(c);
    } catch (const UsageError& e) {
        std::cerr << "blowup: " << e.what() << "\n";
        return kUsage;
    } catch (const DomainError& e) {
        std::cerr << "blowup: " << e.what() << "\n";
        return kUsage;
    } catch (const std::exception& e) {
        std::cerr << "blowup: " << e.what() << "\n";
        return kNumerical;
    }
    return kUsage;
}
