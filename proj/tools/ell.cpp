// ell: elliptic genera from model files, and the verification suites.
// Exit status: 0 everything held, 1 a residual or check failed, 2 usage or input error.

#include "ell/cli.hpp"
#include "ell/errors.hpp"
#include "ell/model_io.hpp"
#include "ell/symprod.hpp"
#include "ell/toroidal.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <optional>
#include <random>

using namespace ell;
using namespace ell::cli;

namespace {

constexpr int kPass = 0, kFail = 1, kUsage = 2;

struct Flags {
    std::optional<int> qmax, ywin, pmax, denominator, conductor, trials, threads;
    std::optional<std::uint64_t> seed;
    bool strict = false;
    std::optional<std::string> out, data, config;
    std::string format = "text";
};

RunConfig resolve(const Flags& f) {
    RunConfig c = default_run_config();
    if (f.config) c = read_run_config(*f.config, c);
    if (f.qmax) c.qmax = *f.qmax;
    if (f.ywin) c.ywin = *f.ywin;
    if (f.pmax) c.pmax = *f.pmax;
    if (f.denominator) c.denominator = *f.denominator;
    if (f.conductor) c.conductor = *f.conductor;
    if (f.trials) c.trials = *f.trials;
    if (f.threads) c.threads = *f.threads;
    if (f.seed) c.seed = *f.seed;
    if (f.strict) c.strict = true;
    if (f.out) c.out = *f.out;
    if (f.data) c.data_dir = *f.data;
    validate(c);
    return c;
}

void write_out(const RunConfig& c, const std::string& text) {
    if (c.out.empty()) {
        std::cout << text << std::flush;
        return;
    }
    std::ofstream os(c.out, std::ios::binary);
    if (!os) throw ParameterError("cannot write '" + c.out + "'");
    os << text;
}

ManifoldModel load_manifold(const RunConfig& c, const std::string& path) {
    ParsedModel m = parse_model_file(path);
    if (!std::holds_alternative<ManifoldModel>(m))
        throw ParameterError("'" + path + "' holds an orbifold datum; use `ell orbifold`");
    const auto& mm = std::get<ManifoldModel>(m);
    check_conductor(c, trivial_datum(mm));
    return mm;
}

OrbifoldDatum load_datum(const RunConfig& c, const std::string& path) {
    ParsedModel m = parse_model_file(path);
    OrbifoldDatum d = std::holds_alternative<OrbifoldDatum>(m) ? std::get<OrbifoldDatum>(m)
                                                                : trivial_datum(std::get<ManifoldModel>(m));
    check_conductor(c, d);
    return d;
}

cplx parse_complex(const std::string& s) {
    // "re" or "re,im"
    auto comma = s.find(',');
    try {
        if (comma == std::string::npos) return cplx(std::stod(s), 0);
        return cplx(std::stod(s.substr(0, comma)), std::stod(s.substr(comma + 1)));
    } catch (const std::exception&) {
        throw ParameterError("bad complex number '" + s + "' (use re or re,im)");
    }
}

QVec parse_rationals(const std::string& s) {
    QVec v;
    std::size_t start = 0;
    while (start <= s.size()) {
        auto comma = s.find(',', start);
        std::string part = trim(s.substr(start, comma == std::string::npos ? std::string::npos : comma - start));
        if (part.empty()) throw ParameterError("bad rational list '" + s + "'");
        v.push_back(Rational::parse(part));
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    return v;
}

std::string pass_line(bool ok, const std::string& what) { return std::string(ok ? "pass" : "fail") + "  " + what + "\n"; }

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Elliptic genera of manifolds, pairs and orbifolds, with verification suites"};
    app.require_subcommand(1);
    Flags f;
    auto add_globals = [&](CLI::App* a) {
        a->add_option("--qmax", f.qmax, "q truncation order");
        a->add_option("--ywin", f.ywin, "y window half-width");
        a->add_option("--pmax", f.pmax, "p truncation order");
        a->add_option("--denominator", f.denominator, "exponent denominator D (0: automatic)");
        a->add_option("--conductor", f.conductor, "cyclotomic conductor N (0: automatic)");
        a->add_option("--seed", f.seed, "seed of every randomized check");
        a->add_option("--trials", f.trials, "random points per identity check");
        a->add_option("--threads", f.threads, "worker threads for suites (0: all cores)");
        a->add_flag("--strict", f.strict, "refuse undeclared intersection numbers");
        a->add_option("--out", f.out, "write the result here instead of standard output");
        a->add_option("--data", f.data, "directory holding the bundled models/ and fans/");
        a->add_option("--config", f.config, std::string("config file (default: $") + kConfigEnv + ")");
        a->add_option("--format", f.format, "table format")->check(CLI::IsMember({"text", "csv"}));
    };
    add_globals(&app);

    std::string model_path, second_path, kind, suite_name, side = "lhs";
    bool unhatted = false, json = false, times = false;
    int points = 5, deriv = 0;
    std::string z_arg = "0.1,0.05", tau_arg = "0,1", a_arg, d_arg;
    std::function<int(const RunConfig&)> action;

    auto sub = [&](const char* name, const char* help) {
        CLI::App* s = app.add_subcommand(name, help);
        s->fallthrough();
        return s;
    };

    CLI::App* compute = sub("compute", "elliptic genus of a smooth model");
    compute->add_option("model", model_path, "model file")->required();
    compute->callback([&] {
        action = [&](const RunConfig& c) {
            ManifoldModel m = load_manifold(c, model_path);
            if (!m.divisors.empty()) throw ParameterError("'" + m.name + "' carries divisors; use `ell pair`");
            write_out(c, emit_table(elliptic_genus(m, genus_config(c)), parse_format(f.format)));
            return kPass;
        };
    });

    CLI::App* pair = sub("pair", "singular elliptic genus of a pair (hat normalization unless --unhat)");
    pair->add_option("model", model_path, "model file")->required();
    pair->add_flag("--unhat", unhatted, "multiply back the prefactor per Chern root");
    pair->callback([&] {
        action = [&](const RunConfig& c) {
            ManifoldModel m = load_manifold(c, model_path);
            GenusResult g = pair_elliptic_genus(m, genus_config(c));
            write_out(c, unhatted ? emit_table(unhat(g), parse_format(f.format)) : emit_table(g, parse_format(f.format)));
            return kPass;
        };
    });

    CLI::App* orbifold = sub("orbifold", "orbifold elliptic genus of a datum");
    orbifold->add_option("model", model_path, "orbifold model file")->required();
    orbifold->callback([&] {
        action = [&](const RunConfig& c) {
            OrbifoldDatum d = load_datum(c, model_path);
            write_out(c, emit_table(orbifold_elliptic_genus(d, genus_config(c)), parse_format(f.format)));
            return kPass;
        };
    });

    CLI::App* dmvv = sub("dmvv", "both sides of the symmetric-product formula; fails when they differ");
    dmvv->add_option("model", model_path, "model file")->required();
    dmvv->add_option("--side", side, "which series to print")->check(CLI::IsMember({"lhs", "rhs", "residual"}));
    dmvv->callback([&] {
        action = [&](const RunConfig& c) {
            ManifoldModel m = load_manifold(c, model_path);
            DmvvRun run = dmvv_for_model(m, c.pmax, c.qmax, c.ywin);
            const QSeries& s = side == "lhs" ? run.sides.lhs : side == "rhs" ? run.sides.rhs : run.sides.residual;
            write_out(c, emit_table(s, parse_format(f.format)));
            if (!run.sides.residual.empty()) {
                std::cerr << "residual has " << run.sides.residual.size() << " terms\n";
                return kFail;
            }
            return kPass;
        };
    });

    CLI::App* hilbert = sub("hilbert", "generating series of the elliptic genera of Hilbert schemes of a surface");
    hilbert->add_option("model", model_path, "surface model file")->required();
    hilbert->callback([&] {
        action = [&](const RunConfig& c) {
            ManifoldModel m = load_manifold(c, model_path);
            CoeffTable t = dmvv_table(m, c.pmax, c.qmax, c.ywin);
            write_out(c, emit_table(hilbert_scheme_series(t, c.pmax, c.qmax, c.ywin), parse_format(f.format)));
            return kPass;
        };
    });

    CLI::App* fans = sub("fans", "toric identities on fan files");
    fans->require_subcommand(1);
    CLI::App* fverify = fans->add_subcommand("verify", "check one identity on a fan file");
    fverify->fallthrough();
    fverify->add_option("kind", kind, "firstorth, toricsum, theta or push")
        ->required()
        ->check(CLI::IsMember({"firstorth", "toricsum", "theta", "push"}));
    fverify->add_option("fan", model_path, "fan file")->required();
    fverify->add_option("--a", a_arg, "values a(e_i) for theta, comma separated rationals (default: random)");
    fverify->add_option("--tau", tau_arg, "tau for theta, re,im");
    fverify->callback([&] {
        action = [&](const RunConfig& c) {
            FanFile ff = parse_fan_file(model_path);
            bool ok = false;
            std::string what;
            if (kind == "firstorth") {
                auto uni = check_unimodular(ff.fan, ff.lattice);
                ok = uni.ok && verify_firstorth(ff.fan, ff.lattice, c.trials, c.seed);
                what = "first-orthant identity on " + ff.name + ", " + std::to_string(c.trials) + " points" +
                       (uni.ok ? "" : "; " + uni.problems.front());
            } else if (kind == "toricsum") {
                ok = verify_toricsum(ff.fan, c.trials, c.seed);
                what = "sum over cones on " + ff.name + ", " + std::to_string(c.trials) + " points";
            } else if (kind == "theta") {
                QVec a;
                if (a_arg.empty()) {
                    std::mt19937_64 rng(c.seed);
                    std::uniform_int_distribution<int> n(1, 9), d(11, 29);
                    for (int i = 0; i < ff.fan.rank; ++i) a.push_back(Rational(n(rng), d(rng)));
                } else {
                    a = parse_rationals(a_arg);
                }
                cplx tau = parse_complex(tau_arg);
                if (tau.imag() <= 0) throw ParameterError("tau needs a positive imaginary part");
                double r = verify_mainthetalemma(ff.fan, ff.lattice, a, tau, c.trials, c.seed);
                ok = r < 1e-8;
                char buf[32];
                std::snprintf(buf, sizeof buf, "%.3e", r);
                what = "theta identity on " + ff.name + ", residual " + buf;
            } else {
                auto v = push_contract_violation(ff.fan, ff.lattice, ff.degree, c.trials, c.seed);
                ok = !v;
                what = "pushforward contract on " + ff.name + (v ? ": " + *v : "");
            }
            write_out(c, pass_line(ok, what));
            return ok ? kPass : kFail;
        };
    });

    CLI::App* theta = sub("theta", "the theta function");
    theta->require_subcommand(1);
    CLI::App* tdump = theta->add_subcommand("dump", "formal reduced theta through q^qmax");
    tdump->fallthrough();
    tdump->callback([&] {
        action = [&](const RunConfig& c) {
            Truncation t;
            t.D = 2;
            t.Q = c.qmax;
            t.W = c.ywin;
            write_out(c, emit_table(theta_bar(make_truncation(t)), parse_format(f.format)));
            return kPass;
        };
    });
    CLI::App* teval = theta->add_subcommand("eval", "numeric theta(z, tau) from the series");
    teval->fallthrough();
    teval->add_option("z", z_arg, "re or re,im")->required();
    teval->add_option("tau", tau_arg, "re,im")->required();
    teval->add_option("--deriv", deriv, "z-derivative order")->check(CLI::Range(0, 8));
    teval->callback([&] {
        action = [&](const RunConfig& c) {
            cplx z = parse_complex(z_arg), tau = parse_complex(tau_arg);
            if (tau.imag() <= 0) throw ParameterError("tau needs a positive imaginary part");
            cplx v = numeric_theta(z, tau, deriv);
            char buf[96];
            std::snprintf(buf, sizeof buf, "%.15e %.15e\n", v.real(), v.imag());
            write_out(c, buf);
            return kPass;
        };
    });

    CLI::App* verify = sub("verify", "identity checks on model files");
    verify->require_subcommand(1);
    CLI::App* vmckay = verify->add_subcommand("mckay", "orbifold genus against prefactor times the quotient pair genus");
    vmckay->fallthrough();
    vmckay->add_option("orbifold", model_path, "orbifold model file")->required();
    vmckay->add_option("pair", second_path, "quotient pair model file")->required();
    vmckay->callback([&] {
        action = [&](const RunConfig& c) {
            OrbifoldDatum lhs = load_datum(c, model_path);
            ManifoldModel rhs = load_manifold(c, second_path);
            QSeries r = verify_mckay(lhs, rhs, genus_config(c));
            std::string text = pass_line(r.empty(), lhs.name + " against " + rhs.name + " through q^" +
                                                         std::to_string(c.qmax) + ", |y| <= " + std::to_string(c.ywin));
            if (!r.empty()) text += emit_table(r, parse_format(f.format));
            write_out(c, text);
            return r.empty() ? kPass : kFail;
        };
    });
    CLI::App* vjacobi = verify->add_subcommand("jacobi", "numeric weak Jacobi laws at random points");
    vjacobi->fallthrough();
    vjacobi->add_option("model", model_path, "model file")->required();
    vjacobi->add_option("--points", points, "number of random points")->check(CLI::PositiveNumber);
    vjacobi->callback([&] {
        action = [&](const RunConfig& c) {
            ManifoldModel m = load_manifold(c, model_path);
            std::mt19937_64 rng(c.seed);
            std::uniform_real_distribution<double> u(-0.4, 0.4), v(1.0, 1.6);
            JacobiResiduals worst;
            for (int i = 0; i < points; ++i) {
                cplx tau(u(rng), v(rng));
                cplx z(u(rng), 0.2 * u(rng));
                JacobiResiduals r = verify_jacobi(m, z, tau);
                worst.shift_z = std::max(worst.shift_z, r.shift_z);
                worst.shift_tau = std::max(worst.shift_tau, r.shift_tau);
                worst.s_transform = std::max(worst.s_transform, r.s_transform);
            }
            char buf[160];
            std::snprintf(buf, sizeof buf, "%s, %d points: z+1 %.3e, tau+1 %.3e, S %.3e", m.name.c_str(), points,
                          worst.shift_z, worst.shift_tau, worst.s_transform);
            bool ok = worst.max() < 1e-6;
            write_out(c, pass_line(ok, buf));
            return ok ? kPass : kFail;
        };
    });

    CLI::App* suite = sub("suite", "run a named verification suite");
    suite->add_option("name", suite_name, "theta, mckay, jacobi, dmvv, fans or all")
        ->required()
        ->check(CLI::IsMember(suite_names()));
    suite->add_flag("--json", json, "machine-readable report");
    suite->add_flag("--times", times, "include runtimes (the report is then not byte-stable)");
    suite->callback([&] {
        action = [&](const RunConfig& c) {
            SuiteReport r = run_suite(suite_name, c);
            write_out(c, json ? report_json(r, times) : report_text(r, times));
            return r.ok() ? kPass : kFail;
        };
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? kPass : kUsage;
    }
    try {
        RunConfig c = resolve(f);
        return action(c);
    } catch (const PrecisionError& e) {
        std::cerr << "error: " << e.what() << " (raise --qmax or --ywin)\n";
        return kUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kUsage;
    }
}
