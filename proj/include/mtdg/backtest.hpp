#pragma once

#include <Eigen/Dense>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "mtdg/gmm.hpp"
#include "mtdg/mle.hpp"
#include "mtdg/model.hpp"
#include "mtdg/sequence.hpp"

namespace mtdg {

/// chi_hat as a function of the trailing history (most recent first).
using PredictFn = std::function<Eigen::VectorXd(std::span<const std::int32_t>)>;

/// Named estimator procedure: `fit` trains on a window and returns the
/// per-event predictor; `history_len` is how much history the predictor
/// consumes (0 for unconditional ones).
struct Predictor {
    std::string name;
    int history_len = 0;
    std::function<PredictFn(const EventSequence& train)> fit;
};

/// Same conditional law as model_core exposes; backtests go through this
/// entry point so predictions and simulations share one code path.
Eigen::VectorXd predict_distribution(const MtdgModel& model, std::span<const std::int32_t> history);

/// Cross-entropy loss -2 ln chi_hat[realized]. Returns +infinity when the
/// realized state had zero predicted probability.
double epe_loss(const Eigen::VectorXd& chi_hat, int realized);

struct BacktestConfig {
    int train_days = 10;
    int test_days = 1;
    int step_days = 1;
};

struct EpeReport {
    struct PerPredictor {
        std::string name;
        double epe = 0.0;
        double stderr_ = 0.0;
        std::size_t n_events = 0;
        std::size_t n_infinite = 0;  // impossible-event predictions, excluded from the mean
        std::vector<double> day_epe;
        std::vector<std::size_t> day_events;
    };
    std::vector<PerPredictor> predictors;
    BacktestConfig config;
    int windows_scored = 0;
    int windows_skipped = 0;
    std::vector<std::string> skip_log;
};

/// Rolling out-of-sample evaluation: train each predictor on `train_days`
/// days, score every event of the following `test_days` days, shift by
/// `step_days`, and pool the losses. Test-event histories may reach back
/// into the train span (look-back only). A window where any predictor fails
/// to fit is skipped for all predictors so the scored sets stay comparable.
EpeReport rolling_backtest(const EventSequence& seq, const std::vector<Predictor>& predictors,
                           const BacktestConfig& cfg = {});

// Ready-made predictors for the standard comparison table.
Predictor unconditional_predictor();
Predictor uniform_predictor();
Predictor fixed_model_predictor(std::string name, MtdgModel model);
Predictor mle_predictor(int p, MleOptions opts = {});
Predictor gmm_predictor(int p, bool symmetric = true, GmmSolveOptions opts = {});

}  // namespace mtdg
