// Command-line driver: every subcommand reads a flat key=value config,
// runs one module pipeline, and writes versioned artifacts into the output
// directory. All randomness flows from a single root seed (config `seed`,
// overridable with --seed); sub-seeds are derived per consumer.

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "mtdg/backtest.hpp"
#include "mtdg/diagnostics.hpp"
#include "mtdg/errors.hpp"
#include "mtdg/gmm.hpp"
#include "mtdg/io.hpp"
#include "mtdg/mle.hpp"
#include "mtdg/model.hpp"
#include "mtdg/moments.hpp"
#include "mtdg/random.hpp"

namespace fs = std::filesystem;
using namespace mtdg;

namespace {

constexpr std::uint64_t kStreamCliBootstrap = 0x91;

struct Common {
    std::string config_path;
    std::optional<long> seed_override;
    std::string output_dir = ".";
    bool verbose = false;

    Config cfg;
    std::uint64_t seed = 0;

    void prepare() {
        cfg = Config::load(config_path);
        seed = static_cast<std::uint64_t>(seed_override.value_or(cfg.get_int("seed", 0)));
        fs::create_directories(output_dir);
    }
    fs::path out(const std::string& name) const { return fs::path(output_dir) / name; }
    void log(const std::string& msg) const {
        if (verbose) std::cerr << "[mtdg] " << msg << "\n";
    }
};

void add_common(CLI::App* cmd, Common& c) {
    cmd->add_option("--config", c.config_path, "flat key=value config file")->required();
    cmd->add_option("--seed", c.seed_override, "override the config seed");
    cmd->add_option("--output", c.output_dir, "output directory (default: .)");
    cmd->add_flag("--verbose", c.verbose, "progress messages on stderr");
}

std::string flag_name(PriceFlag f) { return to_string(f); }

CorrelationSet correlations_from_config(const Common& c, int max_lag, bool symmetrize,
                                        EventSequence* data_out) {
    if (c.cfg.has("model") == c.cfg.has("data"))
        throw ConfigError("exactly one of 'model' or 'data' must be set");
    if (c.cfg.has("model")) {
        MtdgModel model = load_model(c.cfg.get_str("model"));
        BivariateSet biv = theoretical_bivariate(model, max_lag);
        return signed_event_correlations(biv, model.space());
    }
    EventSequence seq = ingest_trades(c.cfg.get_str("data"));
    if (data_out) *data_out = seq;
    BivariateSet biv = estimate_bivariate(seq, max_lag, symmetrize);
    return signed_event_correlations(biv, seq.space);
}

int run_simulate(Common& c) {
    c.prepare();
    MtdgModel model = load_model(c.cfg.get_str("model"));
    const auto days = static_cast<std::size_t>(c.cfg.get_int("days", 1));
    const auto events = static_cast<std::size_t>(c.cfg.get_int("events_per_day"));
    SimulateOptions opts;
    if (c.cfg.has("burn_in")) opts.burn_in = static_cast<std::size_t>(c.cfg.get_int("burn_in"));
    c.log("simulating " + std::to_string(days) + " day(s) of " + std::to_string(events) + " events");
    EventSequence seq = simulate_days(model, days, events, c.seed, opts);
    export_trades(seq, c.out(c.cfg.get_str("out", "events.csv")));
    return 0;
}

int run_estimate_mle(Common& c) {
    c.prepare();
    EventSequence seq = ingest_trades(c.cfg.get_str("data"));
    const int p = static_cast<int>(c.cfg.get_int("p"));
    MleOptions opts;
    opts.starts = static_cast<int>(c.cfg.get_int("starts", opts.starts));
    opts.seed = c.seed;
    opts.tol = c.cfg.get_double("tol", opts.tol);
    opts.max_iter = static_cast<int>(c.cfg.get_int("max_iter", opts.max_iter));
    opts.eps_feas = c.cfg.get_double("eps_feas", opts.eps_feas);
    opts.beta_max = c.cfg.get_double("beta_max", opts.beta_max);
    opts.alpha_max = c.cfg.get_double("alpha_max", opts.alpha_max);
    c.log("fitting the strong model, p=" + std::to_string(p));
    MleFit fit = fit_mle(seq, p, opts);

    MtdgModel model = build_strong_model(fit.theta, p, opts.eps_feas);
    save_model(model, c.out("mle_model.json"));

    Table t;
    t.meta = {"mtdg-table v1 kind=mle-fit",
              "log_likelihood=" + format_double(fit.report.log_lik),
              "winner_start=" + std::to_string(fit.report.winner_start),
              "evaluations=" + std::to_string(fit.report.evaluations),
              "converged=" + std::string(fit.report.converged ? "true" : "false")};
    for (const auto& b : fit.report.boundary) t.meta.push_back("boundary=" + b);
    t.columns = {"parameter", "value"};
    const char* names[] = {"beta", "B1", "B2", "mu1", "mu2", "nu1",
                           "nu2", "alpha11", "alpha12", "alpha21", "alpha22"};
    const auto v = fit.theta.to_vector();
    for (int i = 0; i < StrongParams::kDim; ++i)
        t.add_row({names[i], format_double(v(i))});
    t.write(c.out("mle_fit.csv"));
    return 0;
}

int run_estimate_gmm(Common& c) {
    c.prepare();
    EventSequence seq = ingest_trades(c.cfg.get_str("data"));
    const int p = static_cast<int>(c.cfg.get_int("p"));
    const bool symmetry = c.cfg.get_bool("symmetry", true);
    GmmSolveOptions opts;
    opts.eps_feas = c.cfg.get_double("eps_feas", opts.eps_feas);
    GmmBuildOptions build_opts;
    build_opts.marginal_tol = c.cfg.get_double("marginal_tol", build_opts.marginal_tol);

    c.log("estimating moments to lag " + std::to_string(p));
    BivariateSet biv = estimate_bivariate(seq, p, symmetry);
    GmmSystem sys = build_gmm_system(biv, p, symmetry, build_opts);
    c.log("solving the constrained least-squares program");
    GmmSolution sol = solve_weakly_constrained(sys, opts);
    MtdgModel model = sol.model.to_model();
    save_model(model, c.out("gmm_model.json"));

    const int resamples = static_cast<int>(c.cfg.get_int("bootstrap_resamples", 200));
    std::vector<Eigen::MatrixXd> se;
    if (resamples > 0) {
        c.log("bootstrapping standard errors over " + std::to_string(resamples) + " resamples");
        GmmBootstrap bs = bootstrap_gmm_errors(seq, p, symmetry, opts, resamples, c.seed);
        se = bs.stderr_a;
    }

    Table params;
    params.meta = {"mtdg-table v1 kind=gmm-params", "p=" + std::to_string(p),
                   std::string("symmetry=") + (symmetry ? "true" : "false")};
    params.columns = {"g", "i", "j", "a_value", "stderr"};
    for (int g = 0; g < p; ++g)
        for (int i = 0; i < sys.m; ++i)
            for (int j = 0; j < sys.m; ++j)
                params.add_row({std::to_string(g + 1), std::to_string(i + 1), std::to_string(j + 1),
                                format_double(sol.model.a_stack.a[static_cast<std::size_t>(g)](i, j)),
                                se.empty() ? "" : format_double(se[static_cast<std::size_t>(g)](i, j))});
    params.write(c.out("gmm_params.csv"));

    Table trace;
    trace.meta = {"mtdg-table v1 kind=gmm-trace"};
    trace.columns = {"key", "value"};
    trace.add_row({"objective", format_double(sol.report.objective)});
    trace.add_row({"residual_norm", format_double(sol.report.residual_norm)});
    trace.add_row({"cut_rounds", std::to_string(sol.report.cut_rounds)});
    trace.add_row({"cuts_generated", std::to_string(sol.report.cuts_generated)});
    trace.add_row({"active_cuts", std::to_string(sol.report.active_cuts)});
    trace.add_row({"qp_iterations", std::to_string(sol.report.qp_iterations)});
    trace.add_row({"condition_estimate", format_double(sol.report.condition_estimate)});
    trace.add_row({"rank", std::to_string(sol.report.rank)});
    trace.add_row({"ridge", format_double(sol.report.ridge)});
    trace.add_row({"boundary", sol.report.boundary ? "true" : "false"});
    trace.write(c.out("gmm_trace.txt"));
    return 0;
}

int run_correlations(Common& c) {
    c.prepare();
    const int max_lag = static_cast<int>(c.cfg.get_int("max_lag"));
    const bool symmetrize = c.cfg.get_bool("symmetrize", false);
    EventSequence data;
    data.states.clear();
    CorrelationSet corr = correlations_from_config(c, max_lag, symmetrize, &data);

    // standard errors: day-block bootstrap for data inputs, zero for exact
    // model-implied correlations
    std::vector<CorrelationSet> replicas;
    if (!data.states.empty()) {
        const int resamples = static_cast<int>(c.cfg.get_int("bootstrap_resamples", 200));
        for (int r = 0; r < resamples; ++r) {
            std::mt19937_64 rng(derive_seed(c.seed, kStreamCliBootstrap, static_cast<std::uint64_t>(r)));
            std::vector<std::size_t> days(data.n_days());
            for (auto& d : days)
                d = static_cast<std::size_t>(uniform01(rng) * static_cast<double>(data.n_days()));
            try {
                BivariateSet biv = estimate_bivariate(data.resample_days(days), max_lag, symmetrize);
                replicas.push_back(signed_event_correlations(biv, data.space));
            } catch (const std::exception&) {
                // a degenerate resample (missing state, short day) is skipped
            }
        }
    }

    Table t;
    t.meta = {"mtdg-table v1 kind=correlations", "max_lag=" + std::to_string(max_lag)};
    t.columns = {"pi1", "pi2", "lag", "value", "stderr"};
    const PriceFlag flags[2] = {PriceFlag::Change, PriceFlag::NoChange};
    for (PriceFlag f1 : flags) {
        for (PriceFlag f2 : flags) {
            for (int l = 1; l <= max_lag; ++l) {
                double se = 0.0;
                if (replicas.size() >= 2) {
                    double mean = 0.0;
                    for (const auto& r : replicas) mean += r.at(f1, f2, l);
                    mean /= static_cast<double>(replicas.size());
                    double var = 0.0;
                    for (const auto& r : replicas) {
                        const double d = r.at(f1, f2, l) - mean;
                        var += d * d;
                    }
                    se = std::sqrt(var / (static_cast<double>(replicas.size()) - 1.0));
                }
                t.add_row({flag_name(f1), flag_name(f2), std::to_string(l),
                           format_double(corr.at(f1, f2, l)), format_double(se)});
            }
        }
    }
    t.write(c.out("correlations.csv"));
    return 0;
}

int run_signature(Common& c) {
    c.prepare();
    const int max_lag = static_cast<int>(c.cfg.get_int("max_lag"));
    const bool symmetrize = c.cfg.get_bool("symmetrize", false);
    CorrelationSet corr = correlations_from_config(c, max_lag, symmetrize, nullptr);

    SignatureConfig sig;
    sig.g_c1 = c.cfg.get_double("g_c1");
    sig.max_lag = max_lag;
    sig.d_lf = c.cfg.get_double("d_lf", 0.0);
    if (c.cfg.has("d_lf_fit_target")) {
        // read the empirical D series (lag,D columns) and fit the offset
        std::ifstream in(c.cfg.get_str("d_lf_fit_target"));
        if (!in) throw IoError("cannot open d_lf_fit_target");
        std::vector<double> emp;
        std::string line;
        while (std::getline(in, line)) {
            if (line.empty() || line[0] == '#' || line.rfind("lag,", 0) == 0) continue;
            const auto comma = line.find(',');
            if (comma == std::string::npos) continue;
            emp.push_back(std::stod(line.substr(comma + 1)));
        }
        sig.d_lf = fit_dlf(emp, corr, sig);
    }

    const std::vector<double> d = signature_plot(corr, sig);
    Table t;
    t.meta = {"mtdg-table v1 kind=signature", "g_c1=" + format_double(sig.g_c1),
              "d_lf=" + format_double(sig.d_lf), "p_c=" + format_double(corr.p_c)};
    t.columns = {"lag", "D"};
    for (std::size_t l = 0; l < d.size(); ++l)
        t.add_row({std::to_string(l + 1), format_double(d[l])});
    t.write(c.out("signature.csv"));
    return 0;
}

int run_backtest(Common& c) {
    c.prepare();
    EventSequence seq = ingest_trades(c.cfg.get_str("data"));
    BacktestConfig bt;
    bt.train_days = static_cast<int>(c.cfg.get_int("train_days", 10));
    bt.test_days = static_cast<int>(c.cfg.get_int("test_days", 1));
    bt.step_days = static_cast<int>(c.cfg.get_int("step_days", 1));
    const int p = static_cast<int>(c.cfg.get_int("p", 0));

    std::vector<Predictor> predictors;
    std::stringstream names(c.cfg.get_str("predictors", "unconditional"));
    std::string name;
    while (std::getline(names, name, ',')) {
        if (name == "unconditional") {
            predictors.push_back(unconditional_predictor());
        } else if (name == "uniform") {
            predictors.push_back(uniform_predictor());
        } else if (name == "mle") {
            MleOptions opts;
            opts.seed = c.seed;
            opts.starts = static_cast<int>(c.cfg.get_int("starts", opts.starts));
            opts.max_iter = static_cast<int>(c.cfg.get_int("max_iter", opts.max_iter));
            predictors.push_back(mle_predictor(p, opts));
        } else if (name == "gmm") {
            GmmSolveOptions opts;
            opts.eps_feas = c.cfg.get_double("eps_feas", opts.eps_feas);
            predictors.push_back(gmm_predictor(p, c.cfg.get_bool("symmetry", true), opts));
        } else if (name.rfind("model:", 0) == 0) {
            MtdgModel model = load_model(name.substr(6));
            predictors.push_back(fixed_model_predictor(name, std::move(model)));
        } else {
            throw ConfigError("unknown predictor '" + name + "'");
        }
    }
    if ((c.cfg.get_str("predictors", "").find("mle") != std::string::npos ||
         c.cfg.get_str("predictors", "").find("gmm") != std::string::npos) &&
        p < 1)
        throw ConfigError("mle/gmm predictors need the config key p");

    c.log("running " + std::to_string(predictors.size()) + " predictor(s)");
    EpeReport report = rolling_backtest(seq, predictors, bt);

    const std::string instrument =
        c.cfg.get_str("instrument", fs::path(c.cfg.get_str("data")).stem().string());
    Table t;
    t.meta = {"mtdg-table v1 kind=epe",
              "train_days=" + std::to_string(bt.train_days),
              "test_days=" + std::to_string(bt.test_days),
              "step_days=" + std::to_string(bt.step_days),
              "windows_scored=" + std::to_string(report.windows_scored),
              "windows_skipped=" + std::to_string(report.windows_skipped)};
    t.columns = {"instrument", "predictor", "epe", "stderr", "n_events", "n_infinite"};
    for (const auto& pr : report.predictors)
        t.add_row({instrument, pr.name, format_double(pr.epe), format_double(pr.stderr_),
                   std::to_string(pr.n_events), std::to_string(pr.n_infinite)});
    t.write(c.out("epe.csv"));

    Table days;
    days.meta = {"mtdg-table v1 kind=epe-days"};
    days.columns = {"instrument", "predictor", "test_day", "epe", "n_events"};
    for (const auto& pr : report.predictors)
        for (std::size_t d = 0; d < pr.day_epe.size(); ++d)
            days.add_row({instrument, pr.name, std::to_string(d + 1), format_double(pr.day_epe[d]),
                          std::to_string(pr.day_events[d])});
    days.write(c.out("epe_days.csv"));
    return 0;
}

int run_validate(Common& c) {
    c.prepare();
    MtdgModel model = load_model(c.cfg.get_str("model"));
    ValidationReport report = validate_model(model, c.cfg.get_double("eps_feas", 1e-6));
    if (report.ok()) {
        std::cout << "model valid: m=" << model.m() << " p=" << model.p() << "\n";
        return 0;
    }
    for (const auto& v : report.violations) std::cout << "violation: " << v << "\n";
    std::cerr << "error: class=validation msg=" << report.violations.size()
              << " invariant(s) violated\n";
    return 2;
}

const char* error_class(const std::exception& e) {
    if (dynamic_cast<const ParseError*>(&e)) return "parse_error";
    if (dynamic_cast<const ConfigError*>(&e)) return "config_error";
    if (dynamic_cast<const DomainError*>(&e)) return "domain_error";
    if (dynamic_cast<const ResourceError*>(&e)) return "resource_error";
    if (dynamic_cast<const NumericError*>(&e)) return "numeric_error";
    if (dynamic_cast<const OptimizationError*>(&e)) return "optimization_error";
    if (dynamic_cast<const IdentifiabilityError*>(&e)) return "identifiability_error";
    if (dynamic_cast<const IoError*>(&e)) return "io_error";
    return "internal_error";
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"mtdg: high-order mixture transition distribution toolkit for signed order flow"};
    app.require_subcommand(1);

    Common c_sim, c_mle, c_gmm, c_corr, c_sig, c_bt, c_val;
    auto* sim = app.add_subcommand("simulate", "Monte Carlo realization of a model");
    add_common(sim, c_sim);
    auto* mle = app.add_subcommand("estimate-mle", "fit the strongly constrained model");
    add_common(mle, c_mle);
    auto* gmm = app.add_subcommand("estimate-gmm", "fit the weakly constrained model");
    add_common(gmm, c_gmm);
    auto* corr = app.add_subcommand("correlations", "signed-event correlation table");
    add_common(corr, c_corr);
    auto* sig = app.add_subcommand("signature", "large-tick signature plot table");
    add_common(sig, c_sig);
    auto* bt = app.add_subcommand("backtest", "rolling out-of-sample prediction error");
    add_common(bt, c_bt);
    auto* val = app.add_subcommand("validate", "model invariant report");
    add_common(val, c_val);

    CLI11_PARSE(app, argc, argv);

    try {
        if (sim->parsed()) return run_simulate(c_sim);
        if (mle->parsed()) return run_estimate_mle(c_mle);
        if (gmm->parsed()) return run_estimate_gmm(c_gmm);
        if (corr->parsed()) return run_correlations(c_corr);
        if (sig->parsed()) return run_signature(c_sig);
        if (bt->parsed()) return run_backtest(c_bt);
        if (val->parsed()) return run_validate(c_val);
    } catch (const std::exception& e) {
        std::cerr << "error: class=" << error_class(e) << " msg=" << e.what() << "\n";
        return 1;
    }
    return 0;
}
