#pragma once

// Command-line front end. run_cli() is the whole program minus process
// plumbing so that tests can drive it in-process.
//
//   cyberprem moments  --config model.json [--r N | --all-r] [--infinite]
//   cyberprem premium  --config model.json [--r N]
//   cyberprem simulate --config model.json [--samples N] [--seed S] [--workers W]
//                      [--statistic size|size_sq|loss|loss_t|diam_tail:N|reach_eq:K]
//                      [--trace out.csv] [--static-tree [--static-trees K] | --materialize]
//   cyberprem sweep    --config model.json --vary p|q|r --range a:b:step [--out f.csv]
//   cyberprem verify   --suite oracle|symmetric|infinite|tail|all
//
// moments, premium, simulate and sweep also take --R --p --q --lambda --t --delta
// to override the config.
//
// Exit codes: 0 success, 1 numeric/domain error, 2 usage or config error.

#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "cyberprem/closed_form.hpp"
#include "cyberprem/config.hpp"
#include "cyberprem/engine.hpp"
#include "cyberprem/error.hpp"
#include "cyberprem/premium.hpp"
#include "cyberprem/verify.hpp"

namespace cyberprem::cli {

// Shortest round-trip decimal, with a trailing ".0" on integral values.
inline std::string format_number(double x) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, x);
    std::string s(buf, res.ptr);
    if (std::isfinite(x) && s.find_first_of(".eE") == std::string::npos) s += ".0";
    return s;
}

struct Range {
    std::vector<double> values;
};

// "a:b:step", inclusive of b up to rounding.
inline Range parse_range(const std::string& text) {
    const auto c1 = text.find(':');
    const auto c2 = c1 == std::string::npos ? std::string::npos : text.find(':', c1 + 1);
    if (c2 == std::string::npos || text.find(':', c2 + 1) != std::string::npos) {
        throw ConfigError("--range '" + text + "': expected a:b:step");
    }
    auto num = [&](const std::string& s) {
        double v = 0.0;
        const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
        if (s.empty() || res.ec != std::errc{} || res.ptr != s.data() + s.size() || !std::isfinite(v)) {
            throw ConfigError("--range '" + text + "': '" + s + "' is not a number");
        }
        return v;
    };
    const double a = num(text.substr(0, c1));
    const double b = num(text.substr(c1 + 1, c2 - c1 - 1));
    const double step = num(text.substr(c2 + 1));
    if (!(step > 0.0)) throw ConfigError("--range '" + text + "': step must be > 0");
    if (b < a) throw ConfigError("--range '" + text + "': end before start");
    const auto count = static_cast<long>(std::floor((b - a) / step + 1e-9)) + 1;
    if (count > 1'000'000) throw ConfigError("--range '" + text + "': too many points");
    Range r;
    for (long i = 0; i < count; ++i) r.values.push_back(std::round((a + static_cast<double>(i) * step) * 1e12) / 1e12);
    return r;
}

struct Overrides {
    std::optional<int> R;
    std::optional<int> r;
    std::optional<double> p;
    std::optional<double> q;
    std::optional<double> lambda;
    std::optional<double> t;
    std::optional<double> delta;

    void attach(CLI::App* app) {
        app->add_option("--R", R, "Override tree radius");
        app->add_option("--p", p, "Override downward percolation probability");
        app->add_option("--q", q, "Override upward percolation probability");
        app->add_option("--lambda", lambda, "Override attack rate");
        app->add_option("--t", t, "Override horizon");
        app->add_option("--delta", delta, "Override premium loading");
    }

    void apply(Json& doc) const {
        if (R) set_field(doc, "R", *R);
        if (r) doc["source"] = Json{{"r", *r}};
        if (p) set_field(doc, "percolation.p", *p);
        if (q) set_field(doc, "percolation.q", *q);
        if (lambda) set_field(doc, "attack.lambda", *lambda);
        if (t) set_field(doc, "attack.t", *t);
        if (delta) set_field(doc, "delta", *delta);
    }
};

inline std::uint64_t default_seed() {
    if (const char* env = std::getenv("PP_SEED")) {
        std::uint64_t v = 0;
        const std::string s(env);
        const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
        if (s.empty() || res.ec != std::errc{} || res.ptr != s.data() + s.size()) {
            throw ConfigError("PP_SEED='" + s + "' is not an unsigned integer");
        }
        return v;
    }
    return 1;
}

inline int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Cyber-risk premiums from bond percolation on random trees"};
    app.require_subcommand(1);

    std::string config_path;
    Overrides ov;

    auto* moments_cmd = app.add_subcommand("moments", "E_r(S) and E_r(S^2) as CSV r,first,second");
    moments_cmd->add_option("--config", config_path, "Model config (JSON)")->required();
    ov.attach(moments_cmd);
    std::optional<int> m_r;
    bool m_all = false;
    bool m_infinite = false;
    auto* m_r_opt = moments_cmd->add_option("--r", m_r, "Source depth");
    moments_cmd->add_flag("--all-r", m_all, "All depths 0..R")->excludes(m_r_opt);
    moments_cmd->add_flag("--infinite", m_infinite, "Infinite-tree moments (requires mu*p < 1)");

    auto* premium_cmd = app.add_subcommand("premium", "Premium quote as JSON");
    premium_cmd->add_option("--config", config_path, "Model config (JSON)")->required();
    ov.attach(premium_cmd);
    premium_cmd->add_option("--r", ov.r, "Fix the source depth");

    auto* sim_cmd = app.add_subcommand("simulate", "Monte Carlo estimate as JSON");
    sim_cmd->add_option("--config", config_path, "Model config (JSON)")->required();
    ov.attach(sim_cmd);
    sim_cmd->add_option("--r", ov.r, "Fix the source depth");
    std::uint64_t samples = 100'000;
    std::optional<std::uint64_t> seed;
    int workers = 1;
    std::string statistic = "size";
    std::string trace_path;
    bool static_tree = false;
    bool materialized = false;
    int static_trees = 100;
    sim_cmd->add_option("--samples", samples, "Number of samples (>= 2)");
    sim_cmd->add_option("--seed", seed, "Master seed (default: $PP_SEED, else 1)");
    sim_cmd->add_option("--workers", workers, "Worker threads")->check(CLI::PositiveNumber);
    sim_cmd->add_option("--statistic", statistic, "size, size_sq, loss, loss_t, diam_tail:N, reach_eq:K");
    sim_cmd->add_option("--trace", trace_path, "Write per-attack CSV trace");
    auto* static_flag = sim_cmd->add_flag("--static-tree", static_tree, "Reuse a fixed pool of trees across attacks");
    sim_cmd->add_option("--static-trees", static_trees, "Tree pool size in static mode")->check(CLI::PositiveNumber);
    sim_cmd->add_flag("--materialize", materialized, "Generate the whole tree for every attack")->excludes(static_flag);

    auto* sweep_cmd = app.add_subcommand("sweep", "Moment curves as CSV p,q,r,first,second");
    sweep_cmd->add_option("--config", config_path, "Model config (JSON)")->required();
    ov.attach(sweep_cmd);
    std::string vary;
    std::string range_text;
    std::string out_path;
    std::vector<double> p_values;
    std::vector<double> q_values;
    std::vector<int> r_values;
    sweep_cmd->add_option("--vary", vary, "Axis to vary")->required()->check(CLI::IsMember({"p", "q", "r"}));
    sweep_cmd->add_option("--range", range_text, "a:b:step")->required();
    sweep_cmd->add_option("--out", out_path, "Output CSV (default stdout)");
    sweep_cmd->add_option("--p-values", p_values, "Fixed p values for the outer grid")->delimiter(',');
    sweep_cmd->add_option("--q-values", q_values, "Fixed q values for the outer grid")->delimiter(',');
    sweep_cmd->add_option("--r-values", r_values, "Fixed r values for the outer grid")->delimiter(',');
    sweep_cmd->add_option("--r", ov.r, "Fix the source depth");

    auto* verify_cmd = app.add_subcommand("verify", "Run a verification suite");
    std::string suite;
    verify_cmd->add_option("--suite", suite, "Suite name")
        ->required()
        ->check(CLI::IsMember({"oracle", "symmetric", "infinite", "tail", "all"}));

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? 0 : 2;
    }

    auto load = [&] {
        Json doc = load_config(config_path);
        ov.apply(doc);
        return build(doc);
    };

    try {
        if (*moments_cmd) {
            const ModelConfig cfg = load();
            std::vector<int> depths;
            if (m_all) {
                for (int r = 0; r <= cfg.R; ++r) depths.push_back(r);
            } else if (m_r) {
                depths.push_back(*m_r);
            } else {
                for (const auto& [r, w] : cfg.source.weights()) depths.push_back(r);
            }
            const double mu = cfg.offspring.mu();
            const double sigma2 = cfg.offspring.sigma2();
            std::ostringstream body;
            body << "r,first,second\n";
            for (int r : depths) {
                const MomentResult m =
                    m_infinite ? MomentResult{first_moment_infinite(r, mu, cfg.percolation),
                                              second_moment_infinite(r, mu, sigma2, cfg.percolation)}
                               : moments({cfg.R, r}, mu, sigma2, cfg.percolation);
                body << r << ',' << format_number(m.first) << ',' << format_number(m.second) << '\n';
            }
            out << body.str();
            return 0;
        }

        if (*premium_cmd) {
            const ModelConfig cfg = load();
            const PremiumQuote q = quote(cfg.attack, cfg.mixed_moments(), cfg.delta);
            out << to_json(q).dump() << '\n';
            return 0;
        }

        if (*sim_cmd) {
            const ModelConfig cfg = load();
            const Statistic stat = Statistic::parse(statistic);
            if (samples < 2) throw ConfigError("--samples must be >= 2");
            SimulationOptions opts;
            opts.mode = static_tree ? TreeMode::static_tree : materialized ? TreeMode::materialized : TreeMode::lazy;
            opts.static_trees = static_trees;
            const Simulator sim(cfg, opts, seed ? *seed : default_seed());
            const McEstimate est = estimate(sim, stat, samples, workers);
            if (!trace_path.empty()) {
                std::ofstream f(trace_path);
                if (!f) throw ConfigError("--trace: cannot write '" + trace_path + "'");
                f << "sample_index,size,diameter,upward_reach,loss\n";
                for (const TraceRow& row : trace(sim, stat, samples, workers)) {
                    f << row.sample_index << ',' << row.stats.size << ',' << row.stats.diameter << ','
                      << row.stats.upward_reach << ',' << format_number(row.stats.loss) << '\n';
                }
            }
            Json j;
            j["statistic"] = stat.name();
            j["mean"] = est.mean;
            j["std_error"] = est.std_error;
            j["n"] = est.n;
            j["seed"] = est.seed;
            out << j.dump() << '\n';
            return 0;
        }

        if (*sweep_cmd) {
            const Range range = parse_range(range_text);
            Json doc = load_config(config_path);
            ov.apply(doc);
            const ModelConfig base = build(doc);
            if (p_values.empty()) p_values.push_back(base.percolation.p);
            if (q_values.empty()) q_values.push_back(base.percolation.q);
            if (r_values.empty()) {
                if (base.source.weights().size() != 1 && vary != "r") {
                    throw ConfigError("sweep: config source is a law over depths; pass --r or --r-values");
                }
                r_values.push_back(base.source.weights().begin()->first);
            }
            const double mu = base.offspring.mu();
            const double sigma2 = base.offspring.sigma2();
            std::ostringstream body;
            body << "p,q,r,first,second\n";
            auto row = [&](double p, double q, int r) {
                const PercolationParams pp{p, q};
                const MomentResult m = moments({base.R, r}, mu, sigma2, pp);
                body << format_number(p) << ',' << format_number(q) << ',' << r << ',' << format_number(m.first)
                     << ',' << format_number(m.second) << '\n';
            };
            if (vary == "p") {
                for (double q : q_values)
                    for (int r : r_values)
                        for (double p : range.values) row(p, q, r);
            } else if (vary == "q") {
                for (double p : p_values)
                    for (int r : r_values)
                        for (double q : range.values) row(p, q, r);
            } else {
                for (double v : range.values) {
                    if (std::floor(v) != v) throw ConfigError("--range for r must step over integers");
                }
                for (double p : p_values)
                    for (double q : q_values)
                        for (double v : range.values) row(p, q, static_cast<int>(v));
            }
            if (out_path.empty()) {
                out << body.str();
            } else {
                std::ofstream f(out_path);
                if (!f) throw ConfigError("--out: cannot write '" + out_path + "'");
                f << body.str();
            }
            return 0;
        }

        if (*verify_cmd) {
            const std::vector<std::string> names =
                suite == "all" ? std::vector<std::string>{"oracle", "symmetric", "infinite", "tail"}
                               : std::vector<std::string>{suite};
            bool ok = true;
            for (const auto& name : names) {
                const verify::SuiteReport rep = verify::run_suite(name);
                verify::print(out, rep);
                ok = ok && rep.passed();
            }
            return ok ? 0 : 1;
        }
    } catch (const ConfigError& e) {
        err << "error: " << e.what() << '\n';
        return 2;
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    }
    return 2;
}

}  // namespace cyberprem::cli
