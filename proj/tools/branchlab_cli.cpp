// branchlab: command-line front end.
//
//   branchlab pgf       --config pgf.json       [--out F.csv]
//   branchlab limits    --config limits.json    [--sample N] [--out ...]
//   branchlab simulate  --config experiment.json [--out paths.csv]
//   branchlab verify    --config experiment.json [--out report.json]
//   branchlab explosion --config explosion.json  [--out report.json]
//   branchlab table                              [--out table.json]
//
// Exit codes: 0 pass, 1 verification failed, 2 config error, 3 runtime error.

#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "branchlab/harness.hpp"
#include "branchlab/limit_theory.hpp"
#include "branchlab/offspring_io.hpp"
#include "branchlab/pgf_engine.hpp"
#include "branchlab/stable_sampler.hpp"

using namespace branchlab;
using nlohmann::json;

namespace
{
enum Exit
{
    kPass = 0,
    kFail = 1,
    kConfig = 2,
    kRuntime = 3
};

struct Options
{
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::string out;
    std::optional<unsigned> threads;
    std::optional<double> significance;
    std::size_t sample = 0;
    bool timing = false;
};

json load_config(std::string const& path)
{
    if (path.empty())
    {
        throw ConfigError("", "--config is required");
    }
    std::ifstream in(path);
    if (!in)
    {
        throw ConfigError("", "cannot open " + path);
    }
    try
    {
        return json::parse(in);
    }
    catch (json::parse_error const& e)
    {
        throw ConfigError("", std::string("malformed JSON: ") + e.what());
    }
}

// Writes to --out when given, stdout otherwise.
void emit(std::string const& out, std::string const& text)
{
    if (out.empty())
    {
        std::cout << text;
        return;
    }
    std::ofstream f(out, std::ios::binary);
    if (!f)
    {
        throw std::runtime_error("cannot write " + out);
    }
    f << text;
}

std::string csv_sibling(std::string const& path)
{
    auto const dot = path.rfind('.');
    auto const slash = path.rfind('/');
    if (dot == std::string::npos || (slash != std::string::npos && dot < slash))
    {
        return path + ".csv";
    }
    return path.substr(0, dot) + ".csv";
}

std::string num(double v)
{
    if (std::isnan(v))
    {
        return "";
    }
    if (std::isinf(v))
    {
        return v > 0 ? "inf" : "-inf";
    }
    std::ostringstream os;
    os << std::setprecision(17) << v;
    return os.str();
}

ExperimentConfig load_experiment(Options const& opt)
{
    json j = load_config(opt.config_path);
    if (j.is_object())
    {
        if (opt.seed)
        {
            j["seed"] = *opt.seed;
        }
        if (opt.threads)
        {
            j["threads"] = *opt.threads;
        }
        if (opt.significance)
        {
            j["significance"] = *opt.significance;
        }
    }
    return experiment_from_json(j);
}

//---------------------------------------------------------------------------//
int cmd_pgf(Options const& opt)
{
    json const j = load_config(opt.config_path);
    if (!j.is_object() || !j.contains("process"))
    {
        throw ConfigError("/process", "missing required field");
    }
    auto const process = process_from_json(j.at("process"), "/process");
    auto const s_grid
        = json_field::required<std::vector<double>>(j, "s", "");
    auto const t_grid
        = json_field::required<std::vector<double>>(j, "t", "");
    for (std::size_t i = 0; i < s_grid.size(); ++i)
    {
        if (!(s_grid[i] >= 0.0 && s_grid[i] <= 1.0))
        {
            throw ConfigError("/s/" + std::to_string(i), "must lie in [0, 1]");
        }
    }
    for (std::size_t i = 0; i < t_grid.size(); ++i)
    {
        if (!(t_grid[i] >= 0.0))
        {
            throw ConfigError("/t/" + std::to_string(i), "must be nonnegative");
        }
    }

    bool const infinite_mean = !std::isfinite(moment_profile(process).mean_m);
    std::optional<CsbpProfile> csbp;
    if (infinite_mean)
    {
        try
        {
            csbp = stable_profile(process);
        }
        catch (std::exception const&)
        {
        }
    }

    std::ostringstream os;
    os << "s,t,F,F_closed,F_ode,closed_minus_ode,G,csbp_residual\n";
    for (double t : t_grid)
    {
        for (double s : s_grid)
        {
            double const f = evaluate_F(process, s, t);
            auto const closed = evaluate_F_closed(process, s, t);
            double const ode = evaluate_F_ode(process, s, t);
            double const g = conditional_pgf_G(process, s, t);
            double residual = std::nan("");
            if (csbp && s < 1.0)
            {
                residual = csbp_residual(process, s, t).value;
            }
            os << num(s) << ',' << num(t) << ',' << num(f) << ','
               << (closed ? num(*closed) : "") << ',' << num(ode) << ','
               << (closed ? num(*closed - ode) : "") << ',' << num(g) << ','
               << num(residual) << '\n';
        }
    }
    emit(opt.out, os.str());
    return kPass;
}

int cmd_limits(Options const& opt)
{
    json const j = load_config(opt.config_path);
    if (!j.is_object())
    {
        throw ConfigError("", "limits config must be an object");
    }
    auto const process = process_from_json(j.at("process"), "/process");
    auto const times = json_field::required<std::vector<double>>(j, "t", "");
    double const n = json_field::optional<double>(j, "initial_n", "", 0.0);
    std::uint64_t const seed = opt.seed.value_or(
        json_field::optional<std::uint64_t>(j, "seed", "", 0));

    // Pick the regime the law admits, strongest moment assumption first.
    json out;
    std::vector<LimitLaw> laws;
    auto const mp = moment_profile(process);
    if (process.offspring.get_if<law::Sibuya>())
    {
        auto const p = explosive_profile(process);
        out["explosive"] = to_json(p);
        json rows = json::array();
        for (double t : times)
        {
            json row{{"t", t},
                     {"alpha_t", p.alpha_t(t)},
                     {"beta_t", p.beta_t(t)},
                     {"p_infinity", p.p_infinity(t)}};
            if (n > 0.0)
            {
                row["an"] = p.an(n, t);
            }
            rows.push_back(row);
            laws.push_back(
                {LimitLaw::Kind::one_sided, p.alpha_t(t), 1.0 / p.alpha_t(t)});
        }
        out["times"] = rows;
        out["mean_explosion_time"] = p.mean_explosion_time();
    }
    else if (mp.second_moment_finite)
    {
        auto const p = gaussian_profile(process);
        out["gaussian"] = to_json(p);
        json rows = json::array();
        for (double t : times)
        {
            rows.push_back({{"t", t}, {"m", p.m(t)}, {"sigma2", p.sigma2(t)}});
            laws.push_back({LimitLaw::Kind::gaussian, 2.0, p.sigma2(t)});
        }
        out["times"] = rows;
    }
    else if (std::isfinite(mp.mean_m))
    {
        auto const p = stable_ou_profile(process);
        out["stable_ou"] = to_json(p);
        if (n > 0.0)
        {
            out["an"] = normalizer_an(process.offspring, p.alpha, n);
        }
        json rows = json::array();
        for (double t : times)
        {
            rows.push_back({{"t", t}, {"m", p.m(t)}, {"c", p.c(t)}});
            laws.push_back({p.alpha == 2.0 ? LimitLaw::Kind::gaussian
                                           : LimitLaw::Kind::spectrally_positive,
                            p.alpha,
                            p.c(t)});
        }
        out["times"] = rows;
    }
    else
    {
        auto const p = stable_profile(process);
        out["csbp"] = to_json(p);
        json rows = json::array();
        for (double t : times)
        {
            rows.push_back({{"t", t}, {"alpha", p.alpha(t)}, {"beta", p.beta(t)}});
            laws.push_back({LimitLaw::Kind::one_sided, p.alpha(t), p.beta(t)});
        }
        out["times"] = rows;
    }

    if (opt.sample == 0)
    {
        emit(opt.out, out.dump(2) + "\n");
        return kPass;
    }
    std::ostringstream os;
    os << "time,draw,value\n";
    std::uint64_t const key = derive_key(seed, stream_tag::limit);
    for (std::size_t i = 0; i < times.size(); ++i)
    {
        RandomStream rng(key, i);
        for (std::size_t k = 0; k < opt.sample; ++k)
        {
            os << num(times[i]) << ',' << k << ',' << num(laws[i].sample(rng))
               << '\n';
        }
    }
    emit(opt.out, os.str());
    return kPass;
}

int cmd_simulate(Options const& opt)
{
    auto const cfg = load_experiment(opt);
    auto const ens = simulate_ensemble(cfg.process, cfg.sim);
    std::ostringstream os;
    write_csv(os, ens);
    emit(opt.out, os.str());
    return kPass;
}

int write_report(Options const& opt, Report const& rep)
{
    std::string const text = to_json(rep).dump(2) + "\n";
    if (opt.out.empty())
    {
        std::cout << text;
    }
    else
    {
        emit(opt.out, text);
        std::ostringstream csv;
        write_csv(csv, rep);
        emit(csv_sibling(opt.out), csv.str());
    }
    for (auto const& c : rep.checks)
    {
        std::cerr << (c.pass ? "pass " : "FAIL ") << c.type << " t=" << c.time_s;
        if (c.time_t)
        {
            std::cerr << "," << *c.time_t;
        }
        std::cerr << " statistic=" << c.statistic << " threshold=" << c.threshold
                  << '\n';
    }
    std::cerr << rep.id << ": " << (rep.pass ? "PASS" : "FAIL") << '\n';
    return rep.pass ? kPass : kFail;
}

int cmd_verify(Options const& opt)
{
    return write_report(opt, run_experiment(load_experiment(opt)));
}

int cmd_explosion(Options const& opt)
{
    auto const cfg = load_experiment(opt);
    if (cfg.regime != Regime::explosion_time)
    {
        throw ConfigError("/regime", "explosion needs regime explosion_time");
    }
    auto const rep = run_experiment(cfg);
    std::cerr << "mean_T " << rep.summary.at("mean_T").get<double>()
              << " (theory " << rep.summary.at("theory_mean_T").get<double>()
              << ")\n";
    return write_report(opt, rep);
}

int cmd_table(Options const& opt)
{
    struct Row
    {
        std::string name;
        std::string parameters;
        std::string pgf;
        std::string L;
        std::string alpha;
        std::string beta;
        ProcessParams process;
    };
    std::vector<Row> const rows{
        {"neveu",
         "none",
         "s + (1-s) log(1-s)",
         "1 + log x",
         "exp(-a t)",
         "1",
         {1.0, law::NeveuHarmonic{}}},
        {"generalized_neveu",
         "b=0.5, c=0.2",
         "s + (1-s)(c + b log(1-s))",
         "1 - c + b log x",
         "exp(-a b t)",
         "exp((c/b)(exp(-a b t) - 1))",
         {1.0, law::GeneralizedNeveu{0.5, 0.2}}},
        {"luria_delbruck",
         "b=1",
         "(1-s)^(b(1-s)/s)",
         "x (1 - x^(b/(1-x)))",
         "exp(-a b t)",
         "exp((exp(-a b t) - 1)/b)",
         {1.0, law::LuriaDelbruck{1.0}}},
    };
    double const t = 1.0;
    json out = json::array();
    std::ostringstream text;
    text << "a = 1, t = 1\n";
    for (auto const& r : rows)
    {
        auto const p = stable_profile(r.process);
        out.push_back({{"example", r.name},
                       {"parameters", r.parameters},
                       {"pgf", r.pgf},
                       {"L", r.L},
                       {"alpha_t", r.alpha},
                       {"beta_t", r.beta},
                       {"alpha", p.alpha(t)},
                       {"beta", p.beta(t)}});
        text << '\n'
             << r.name << " (" << r.parameters << ")\n"
             << "  pgf f(s)  " << r.pgf << '\n'
             << "  L(x)      " << r.L << '\n'
             << "  alpha(t)  " << r.alpha << " = " << num(p.alpha(t)) << '\n'
             << "  beta(t)   " << r.beta << " = " << num(p.beta(t)) << '\n';
    }
    if (opt.out.empty())
    {
        std::cout << text.str();
    }
    else
    {
        emit(opt.out, out.dump(2) + "\n");
    }
    return kPass;
}
}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"branchlab: branching processes started from large n"};
    app.require_subcommand(1);
    Options opt;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", opt.config_path, "JSON config file");
        sub->add_option("--out", opt.out, "output file (default stdout)");
        sub->add_option("--seed", opt.seed, "override the config seed");
        sub->add_option("--threads", opt.threads, "worker threads (0: all)");
        sub->add_option("--significance", opt.significance, "KS level");
        sub->add_flag("--timing", opt.timing, "print wall time to stderr");
    };
    auto* pgf = app.add_subcommand("pgf", "F(s,t) on an (s,t) grid as CSV");
    auto* limits = app.add_subcommand("limits", "limit profiles and samples");
    auto* simulate = app.add_subcommand("simulate", "ensemble paths as CSV");
    auto* verify = app.add_subcommand("verify", "run an experiment, write a report");
    auto* explosion = app.add_subcommand("explosion", "explosion-time experiment");
    auto* table = app.add_subcommand("table", "summary table of the infinite-mean examples");
    for (auto* sub : {pgf, limits, simulate, verify, explosion, table})
    {
        add_common(sub);
    }
    limits->add_option("--sample", opt.sample, "draws per time from the limit law");

    try
    {
        app.parse(argc, argv);
    }
    catch (CLI::ParseError const& e)
    {
        int const code = app.exit(e);
        return code == 0 ? kPass : kConfig;
    }

    auto const start = std::chrono::steady_clock::now();
    int code = kRuntime;
    try
    {
        if (*pgf)
            code = cmd_pgf(opt);
        else if (*limits)
            code = cmd_limits(opt);
        else if (*simulate)
            code = cmd_simulate(opt);
        else if (*verify)
            code = cmd_verify(opt);
        else if (*explosion)
            code = cmd_explosion(opt);
        else
            code = cmd_table(opt);
    }
    catch (ConfigError const& e)
    {
        std::cerr << "config error " << e.what() << '\n';
        return kConfig;
    }
    catch (nlohmann::json::exception const& e)
    {
        std::cerr << "config error: " << e.what() << '\n';
        return kConfig;
    }
    catch (std::exception const& e)
    {
        std::cerr << "error: " << e.what() << '\n';
        return kRuntime;
    }
    if (opt.timing)
    {
        std::chrono::duration<double> const dt
            = std::chrono::steady_clock::now() - start;
        std::cerr << "wall time " << dt.count() << " s\n";
    }
    return code;
}
