#include <doctest.h>

#include <cmath>

#include "mtdg/backtest.hpp"
#include "mtdg/errors.hpp"
#include "mtdg/moments.hpp"
#include "support/test_support.hpp"

using namespace mtdg;
using namespace mtdg::testsupport;

TEST_CASE("predict_distribution matches conditional_distribution bit for bit") {
    auto model = random_centro_model(800, 4, 0.6);
    std::mt19937_64 rng(801);
    for (int rep = 0; rep < 30; ++rep) {
        std::vector<std::int32_t> hist(4);
        for (auto& h : hist) h = 1 + static_cast<std::int32_t>(uniform01(rng) * 4);
        const Eigen::VectorXd a = predict_distribution(model, hist);
        const Eigen::VectorXd b = conditional_distribution(model, hist);
        CHECK((a - b).cwiseAbs().maxCoeff() == 0.0);
    }
}

TEST_CASE("predict_distribution: iid model emits eta, order-1 model emits the Q row") {
    Eigen::VectorXd eta(4);
    eta << 0.2, 0.3, 0.3, 0.2;
    DeviationStack stack;
    stack.a.push_back(Eigen::MatrixXd::Zero(4, 4));
    auto iid = MtdgModel::from_deviation(StateSpace::signed_events(), eta, stack);
    std::vector<std::int32_t> h1{3};
    CHECK((predict_distribution(iid, h1) - eta).cwiseAbs().maxCoeff() < 1e-15);

    Eigen::MatrixXd q(2, 2);
    q << 0.8, 0.2, 0.4, 0.6;
    Eigen::VectorXd lambda(1);
    lambda << 1.0;
    auto order1 = MtdgModel::from_mixture(StateSpace::plain(2), lambda, {q});
    std::vector<std::int32_t> h2{1};
    CHECK((predict_distribution(order1, h2).transpose() - q.row(0)).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("epe_loss: certainty, uniform, and impossible predictions") {
    Eigen::VectorXd sure(4);
    sure << 0.0, 1.0, 0.0, 0.0;
    CHECK(epe_loss(sure, 2) == 0.0);

    Eigen::VectorXd uniform4 = Eigen::VectorXd::Constant(4, 0.25);
    CHECK(epe_loss(uniform4, 3) == doctest::Approx(2.0 * std::log(4.0)).epsilon(1e-12));

    CHECK(std::isinf(epe_loss(sure, 1)));
    CHECK_THROWS_AS((void)epe_loss(sure, 5), DomainError);
}

TEST_CASE("rolling_backtest: window count and the unconditional benchmark") {
    auto model = random_centro_model(810, 2, 0.5);
    EventSequence seq = simulate_days(model, 30, 400, 5);
    EpeReport report = rolling_backtest(seq, {unconditional_predictor()}, {10, 1, 1});
    CHECK(report.windows_scored == 20);
    CHECK(report.predictors[0].n_events == 20 * 400);

    // recompute the benchmark by hand for the first window
    EventSequence train = seq.slice_days(0, 10);
    Eigen::VectorXd eta_hat = estimate_stationary(train);
    auto [first, last] = seq.day_span(10);
    double acc = 0.0;
    for (std::size_t t = first; t < last; ++t) acc += -2.0 * std::log(eta_hat(seq.states[t] - 1));
    CHECK(report.predictors[0].day_epe[0] ==
          doctest::Approx(acc / static_cast<double>(last - first)).epsilon(1e-12));
}

TEST_CASE("rolling_backtest: true model beats the unconditional benchmark on synthetic data") {
    auto model = random_centro_model(811, 3, 0.8);
    EventSequence seq = simulate_days(model, 14, 1500, 6);
    EpeReport report = rolling_backtest(
        seq, {unconditional_predictor(), fixed_model_predictor("truth", model)}, {10, 1, 1});
    const auto& uncond = report.predictors[0];
    const auto& truth = report.predictors[1];
    CHECK(truth.epe < uncond.epe);
    CHECK(std::isfinite(truth.stderr_));
}

TEST_CASE("rolling_backtest: uniform predictor scores exactly 2 ln m") {
    auto model = random_centro_model(812, 2, 0.4);
    EventSequence seq = simulate_days(model, 12, 300, 7);
    EpeReport report = rolling_backtest(seq, {uniform_predictor()}, {10, 1, 1});
    CHECK(report.predictors[0].epe == doctest::Approx(2.0 * std::log(4.0)).epsilon(1e-12));
    CHECK(report.predictors[0].stderr_ == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("rolling_backtest: EPE invariant under consistent relabeling") {
    auto model = random_centro_model(813, 2, 0.7);
    EventSequence seq = simulate_days(model, 12, 500, 8);

    // mirror both the data and the model through the buy/sell flip
    EventSequence mirrored = seq;
    for (auto& s : mirrored.states) s = static_cast<std::int32_t>(5 - s);
    DeviationStack flipped;
    for (const auto& a : model.a_stack().a) flipped.a.push_back(centro_flip(a));
    Eigen::VectorXd eta_flip = model.eta().reverse();
    auto mirrored_model =
        MtdgModel::from_deviation(StateSpace::signed_events(), eta_flip, flipped);

    EpeReport r1 = rolling_backtest(seq, {fixed_model_predictor("m", model)}, {10, 1, 1});
    EpeReport r2 =
        rolling_backtest(mirrored, {fixed_model_predictor("m", mirrored_model)}, {10, 1, 1});
    CHECK(r1.predictors[0].epe == doctest::Approx(r2.predictors[0].epe).epsilon(1e-12));
}

TEST_CASE("rolling_backtest: certain predictions contribute zero loss") {
    // a predictor that always puts probability one on the realized next state
    // of a deterministic alternating sequence
    EventSequence seq;
    seq.space = StateSpace::plain(2);
    for (int d = 0; d < 12; ++d) {
        seq.day_offsets.push_back(seq.states.size());
        for (int t = 0; t < 50; ++t) seq.states.push_back(static_cast<std::int32_t>(1 + (t % 2)));
    }
    Predictor oracle;
    oracle.name = "alternator";
    oracle.history_len = 1;
    oracle.fit = [](const EventSequence&) -> PredictFn {
        return [](std::span<const std::int32_t> hist) {
            Eigen::VectorXd out = Eigen::VectorXd::Zero(2);
            out(hist[0] == 1 ? 1 : 0) = 1.0;
            return out;
        };
    };
    EpeReport report = rolling_backtest(seq, {oracle}, {10, 1, 1});
    CHECK(report.predictors[0].epe == 0.0);
    CHECK(report.predictors[0].n_infinite == 0);
}

TEST_CASE("rolling_backtest: impossible events are excluded and counted") {
    EventSequence seq;
    seq.space = StateSpace::plain(2);
    for (int d = 0; d < 11; ++d) {
        seq.day_offsets.push_back(seq.states.size());
        for (int t = 0; t < 20; ++t) seq.states.push_back(static_cast<std::int32_t>(1 + (t % 2)));
    }
    Predictor stubborn;
    stubborn.name = "state1-only";
    stubborn.history_len = 0;
    stubborn.fit = [](const EventSequence&) -> PredictFn {
        return [](std::span<const std::int32_t>) {
            Eigen::VectorXd out(2);
            out << 1.0, 0.0;
            return out;
        };
    };
    EpeReport report = rolling_backtest(seq, {stubborn}, {10, 1, 1});
    CHECK(report.predictors[0].n_infinite == 10);  // the state-2 events
    CHECK(report.predictors[0].n_events == 10);
    CHECK(report.predictors[0].epe == 0.0);
}

TEST_CASE("rolling_backtest: failing fits skip the window and are logged") {
    auto model = random_centro_model(814, 2, 0.4);
    EventSequence seq = simulate_days(model, 13, 200, 9);
    Predictor flaky;
    flaky.name = "flaky";
    flaky.history_len = 0;
    int call = 0;
    flaky.fit = [&call](const EventSequence& train) -> PredictFn {
        if (++call == 2) throw OptimizationError("window two refuses to fit");
        Eigen::VectorXd eta = estimate_stationary(train);
        return [eta](std::span<const std::int32_t>) { return eta; };
    };
    EpeReport report = rolling_backtest(seq, {flaky}, {10, 1, 1});
    CHECK(report.windows_scored == 2);
    CHECK(report.windows_skipped == 1);
    REQUIRE(report.skip_log.size() == 1);
    CHECK(report.skip_log[0].find("flaky") != std::string::npos);
}

TEST_CASE("rolling_backtest: single-day input fails the precondition") {
    auto model = random_centro_model(815, 2, 0.4);
    EventSequence seq = simulate(model, 500, 10);
    CHECK_THROWS_AS((void)rolling_backtest(seq, {unconditional_predictor()}, {10, 1, 1}),
                    DomainError);
}
