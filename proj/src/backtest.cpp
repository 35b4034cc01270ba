#include "mtdg/backtest.hpp"

#include <cmath>
#include <limits>

#include "mtdg/errors.hpp"
#include "mtdg/moments.hpp"

namespace mtdg {

Eigen::VectorXd predict_distribution(const MtdgModel& model, std::span<const std::int32_t> history) {
    return conditional_distribution(model, history);
}

double epe_loss(const Eigen::VectorXd& chi_hat, int realized) {
    if (realized < 1 || realized > static_cast<int>(chi_hat.size()))
        throw DomainError("realized state out of range 1..m");
    const double p = chi_hat(realized - 1);
    if (p <= 0.0) return std::numeric_limits<double>::infinity();
    return -2.0 * std::log(p);
}

EpeReport rolling_backtest(const EventSequence& seq, const std::vector<Predictor>& predictors,
                           const BacktestConfig& cfg) {
    seq.check();
    if (predictors.empty()) throw DomainError("rolling_backtest needs at least one predictor");
    if (cfg.train_days < 1 || cfg.test_days < 1 || cfg.step_days < 1)
        throw DomainError("window sizes must be positive");
    const std::size_t n_days = seq.n_days();
    if (n_days < static_cast<std::size_t>(cfg.train_days + cfg.test_days))
        throw DomainError("sequence spans fewer days than train + test");

    EpeReport report;
    report.config = cfg;
    struct Acc {
        double sum = 0.0;
        double sum_sq = 0.0;
        std::size_t n = 0;
        std::size_t n_inf = 0;
        std::vector<double> day_sum;
        std::vector<std::size_t> day_n;
    };
    std::vector<Acc> acc(predictors.size());

    std::vector<std::int32_t> history;
    for (std::size_t w = 0; w + static_cast<std::size_t>(cfg.train_days + cfg.test_days) <= n_days;
         w += static_cast<std::size_t>(cfg.step_days)) {
        // fit all predictors first so that one failure skips the whole window
        std::vector<PredictFn> fns;
        fns.reserve(predictors.size());
        bool failed = false;
        EventSequence train = seq.slice_days(w, static_cast<std::size_t>(cfg.train_days));
        for (const auto& pred : predictors) {
            try {
                fns.push_back(pred.fit(train));
            } catch (const std::exception& e) {
                report.skip_log.push_back("window at day " + std::to_string(w + 1) + ": " +
                                          pred.name + " failed: " + e.what());
                failed = true;
                break;
            }
        }
        if (failed) {
            ++report.windows_skipped;
            continue;
        }

        for (int td = 0; td < cfg.test_days; ++td) {
            const std::size_t day = w + static_cast<std::size_t>(cfg.train_days) +
                                    static_cast<std::size_t>(td);
            auto [first, last] = seq.day_span(day);
            for (std::size_t k = 0; k < predictors.size(); ++k) {
                acc[k].day_sum.push_back(0.0);
                acc[k].day_n.push_back(0);
            }
            for (std::size_t t = first; t < last; ++t) {
                for (std::size_t k = 0; k < predictors.size(); ++k) {
                    const int ph = predictors[k].history_len;
                    if (t < static_cast<std::size_t>(ph)) continue;
                    history.assign(static_cast<std::size_t>(ph), 0);
                    for (int g = 1; g <= ph; ++g)
                        history[static_cast<std::size_t>(g - 1)] =
                            seq.states[t - static_cast<std::size_t>(g)];
                    const double loss = epe_loss(fns[k](history), seq.states[t]);
                    if (std::isinf(loss)) {
                        ++acc[k].n_inf;
                        continue;
                    }
                    acc[k].sum += loss;
                    acc[k].sum_sq += loss * loss;
                    ++acc[k].n;
                    acc[k].day_sum.back() += loss;
                    ++acc[k].day_n.back();
                }
            }
        }
        ++report.windows_scored;
    }

    if (report.windows_scored == 0)
        throw OptimizationError("every backtest window was skipped");

    for (std::size_t k = 0; k < predictors.size(); ++k) {
        EpeReport::PerPredictor out;
        out.name = predictors[k].name;
        out.n_events = acc[k].n;
        out.n_infinite = acc[k].n_inf;
        if (acc[k].n > 0) {
            const double n = static_cast<double>(acc[k].n);
            out.epe = acc[k].sum / n;
            if (acc[k].n > 1) {
                const double var = (acc[k].sum_sq - n * out.epe * out.epe) / (n - 1.0);
                out.stderr_ = std::sqrt(std::max(var, 0.0) / n);
            }
        }
        for (std::size_t d = 0; d < acc[k].day_sum.size(); ++d) {
            out.day_events.push_back(acc[k].day_n[d]);
            out.day_epe.push_back(acc[k].day_n[d] > 0
                                      ? acc[k].day_sum[d] / static_cast<double>(acc[k].day_n[d])
                                      : 0.0);
        }
        report.predictors.push_back(std::move(out));
    }
    return report;
}

Predictor unconditional_predictor() {
    Predictor p;
    p.name = "unconditional";
    p.history_len = 0;
    p.fit = [](const EventSequence& train) -> PredictFn {
        Eigen::VectorXd eta = estimate_stationary(train);
        return [eta](std::span<const std::int32_t>) { return eta; };
    };
    return p;
}

Predictor uniform_predictor() {
    Predictor p;
    p.name = "uniform";
    p.history_len = 0;
    p.fit = [](const EventSequence& train) -> PredictFn {
        Eigen::VectorXd u = Eigen::VectorXd::Constant(train.space.m, 1.0 / train.space.m);
        return [u](std::span<const std::int32_t>) { return u; };
    };
    return p;
}

Predictor fixed_model_predictor(std::string name, MtdgModel model) {
    Predictor p;
    p.name = std::move(name);
    p.history_len = model.p();
    p.fit = [model = std::move(model)](const EventSequence&) -> PredictFn {
        return [model](std::span<const std::int32_t> hist) {
            return predict_distribution(model, hist);
        };
    };
    return p;
}

Predictor mle_predictor(int p_order, MleOptions opts) {
    Predictor p;
    p.name = "mle-strong";
    p.history_len = p_order;
    p.fit = [p_order, opts](const EventSequence& train) -> PredictFn {
        MleFit fit = fit_mle(train, p_order, opts);
        MtdgModel model = build_strong_model(fit.theta, p_order, opts.eps_feas);
        return [model](std::span<const std::int32_t> hist) {
            return predict_distribution(model, hist);
        };
    };
    return p;
}

Predictor gmm_predictor(int p_order, bool symmetric, GmmSolveOptions opts) {
    Predictor p;
    p.name = "gmm-weak";
    p.history_len = p_order;
    p.fit = [p_order, symmetric, opts](const EventSequence& train) -> PredictFn {
        BivariateSet biv = estimate_bivariate(train, p_order, symmetric);
        GmmSystem sys = build_gmm_system(biv, p_order, symmetric);
        GmmSolution sol = solve_weakly_constrained(sys, opts);
        MtdgModel model = sol.model.to_model();
        return [model](std::span<const std::int32_t> hist) {
            return predict_distribution(model, hist);
        };
    };
    return p;
}

}  // namespace mtdg
