#include <doctest.h>

#include <cmath>

#include "mtdg/centro.hpp"
#include "mtdg/errors.hpp"
#include "mtdg/moments.hpp"
#include "support/test_support.hpp"

using namespace mtdg;
using namespace mtdg::testsupport;

namespace {

EventSequence make_seq(std::vector<std::int32_t> states, std::vector<std::size_t> offsets, int m) {
    EventSequence seq;
    seq.states = std::move(states);
    seq.day_offsets = std::move(offsets);
    seq.space = m == 4 ? StateSpace::signed_events() : StateSpace::plain(m);
    return seq;
}

}  // namespace

TEST_CASE("estimate_stationary: uniform cycle gives the uniform law") {
    auto seq = make_seq({1, 2, 3, 4, 1, 2, 3, 4}, {0}, 4);
    Eigen::VectorXd eta = estimate_stationary(seq);
    for (int i = 0; i < 4; ++i) CHECK(eta(i) == doctest::Approx(0.25).epsilon(1e-15));
}

TEST_CASE("estimate_stationary: hand-counted symmetrization") {
    // counts (2,1,0,1)/4; symmetrized: (0.375, 0.125, 0.125, 0.375)
    auto seq = make_seq({1, 1, 2, 4}, {0}, 4);
    std::vector<std::string> warnings;
    Eigen::VectorXd eta = estimate_stationary(seq, true, &warnings);
    CHECK(eta(0) == doctest::Approx(0.375).epsilon(1e-15));
    CHECK(eta(1) == doctest::Approx(0.125).epsilon(1e-15));
    CHECK(eta(2) == doctest::Approx(0.125).epsilon(1e-15));
    CHECK(eta(3) == doctest::Approx(0.375).epsilon(1e-15));
    REQUIRE(warnings.size() == 1);  // state 3 never observed
    CHECK(warnings[0].find("state 3") != std::string::npos);
}

TEST_CASE("estimate_stationary: long simulation recovers eta within four standard errors") {
    auto model = random_valid_model(71, 4, 3, 0.6);
    const std::size_t n = 400000;
    EventSequence seq = simulate(model, n, 5);
    Eigen::VectorXd eta_hat = estimate_stationary(seq);
    for (int i = 0; i < 4; ++i) {
        const double se = std::sqrt(model.eta()(i) * (1.0 - model.eta()(i)) / static_cast<double>(n));
        CHECK(std::abs(eta_hat(i) - model.eta()(i)) < 4.0 * se + 1e-4);
    }
}

TEST_CASE("estimate_bivariate: hand-counted single day") {
    auto seq = make_seq({1, 2, 1, 2}, {0}, 2);
    BivariateSet biv = estimate_bivariate(seq, 1);
    CHECK(biv.at(1)(0, 1) == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
    CHECK(biv.at(1)(1, 0) == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
    CHECK(biv.at(1)(0, 0) == 0.0);
    CHECK(biv.at(1)(1, 1) == 0.0);
}

TEST_CASE("estimate_bivariate: day boundaries exclude crossing pairs") {
    auto seq = make_seq({1, 2, 1, 2}, {0, 2}, 2);
    BivariateSet biv = estimate_bivariate(seq, 1);
    CHECK(biv.at(1)(0, 1) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(biv.at(1)(1, 0) == 0.0);
}

TEST_CASE("estimate_bivariate: lag longer than every day raises a domain error") {
    auto seq = make_seq({1, 2, 1, 2}, {0, 2}, 2);
    CHECK_THROWS_AS((void)estimate_bivariate(seq, 2), DomainError);
}

TEST_CASE("estimate_bivariate: iid data factorizes within sampling error") {
    Eigen::VectorXd eta(4);
    eta << 0.2, 0.3, 0.3, 0.2;
    DeviationStack stack;
    for (int g = 0; g < 2; ++g) stack.a.push_back(Eigen::MatrixXd::Zero(4, 4));
    auto model = MtdgModel::from_deviation(StateSpace::signed_events(), eta, stack);
    EventSequence seq = simulate_days(model, 4, 50000, 3);
    BivariateSet biv = estimate_bivariate(seq, 3);
    for (int k = 1; k <= 3; ++k) {
        const Eigen::MatrixXd expect = biv.eta * biv.eta.transpose();
        CHECK((biv.at(k) - expect).cwiseAbs().maxCoeff() < 0.01);
    }
}

TEST_CASE("estimate_bivariate: symmetrized matrices are exactly centrosymmetric with exact marginals") {
    auto model = random_centro_model(81, 3, 0.6);
    EventSequence seq = simulate_days(model, 5, 4000, 17);
    BivariateSet biv = estimate_bivariate(seq, 4, true);
    for (int k = 1; k <= 4; ++k) {
        const Eigen::MatrixXd& bk = biv.at(k);
        CHECK((bk - centro_flip(bk)).cwiseAbs().maxCoeff() < 1e-15);
        CHECK((bk.rowwise().sum() - biv.eta).cwiseAbs().maxCoeff() < 1e-15);
        CHECK((bk.colwise().sum().transpose() - biv.eta).cwiseAbs().maxCoeff() < 1e-15);
        CHECK(bk.sum() == doctest::Approx(1.0).epsilon(1e-14));
    }
}

TEST_CASE("signed_event_correlations: independent joint law gives zero correlations") {
    Eigen::VectorXd eta(4);
    eta << 0.2, 0.3, 0.3, 0.2;
    BivariateSet biv;
    biv.eta = eta;
    biv.b.push_back(Eigen::MatrixXd(eta.asDiagonal()));
    biv.b.push_back(eta * eta.transpose());
    CorrelationSet corr = signed_event_correlations(biv, StateSpace::signed_events());
    const PriceFlag flags[2] = {PriceFlag::Change, PriceFlag::NoChange};
    for (PriceFlag f1 : flags)
        for (PriceFlag f2 : flags) CHECK(std::abs(corr.at(f1, f2, 1)) < 1e-15);
    CHECK(corr.p_c + corr.p_nc == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("signed_event_correlations: hand-evaluated NC,NC cell") {
    // b22 = b33 = 0.2, b23 = b32 = 0.05, eta2 = eta3 = 0.25 ->
    // C_NC,NC = (0.2 - 0.05 - 0.05 + 0.2) / 0.25 = 1.2
    Eigen::VectorXd eta(4);
    eta << 0.25, 0.25, 0.25, 0.25;
    Eigen::MatrixXd b = Eigen::MatrixXd::Zero(4, 4);
    b(1, 1) = 0.2;
    b(2, 2) = 0.2;
    b(1, 2) = 0.05;
    b(2, 1) = 0.05;
    // fill the C rows/columns so the matrix is a sane distribution; they do
    // not enter the NC,NC cell apart from the eta product, which is
    // subtracted out by symmetry here (eta2 eta3 terms cancel pairwise)
    b(0, 0) = 0.2;
    b(3, 3) = 0.2;
    b(0, 3) = 0.05;
    b(3, 0) = 0.05;
    BivariateSet biv;
    biv.eta = eta;
    biv.b.push_back(Eigen::MatrixXd(eta.asDiagonal()));
    biv.b.push_back(b);
    CorrelationSet corr = signed_event_correlations(biv, StateSpace::signed_events());
    CHECK(corr.at(PriceFlag::NoChange, PriceFlag::NoChange, 1) ==
          doctest::Approx(1.2).epsilon(1e-12));
}

TEST_CASE("signed_event_correlations: requires the event mapping") {
    BivariateSet biv;
    biv.eta = Eigen::VectorXd::Constant(4, 0.25);
    biv.b.push_back(Eigen::MatrixXd(biv.eta.asDiagonal()));
    CHECK_THROWS_AS((void)signed_event_correlations(biv, StateSpace::plain(4)), DomainError);
}

TEST_CASE("signed_event_correlations: simulated data matches the theoretical oracle chain") {
    auto model = random_centro_model(91, 3, 0.6);
    CorrelationSet theory = signed_event_correlations(theoretical_bivariate(model, 3), model.space());

    // spread of the estimator over independent replicas bounds the deviation
    const int n_rep = 24;
    std::vector<CorrelationSet> reps;
    for (int r = 0; r < n_rep; ++r) {
        EventSequence seq = simulate_days(model, 2, 20000, 1000 + static_cast<std::uint64_t>(r));
        reps.push_back(signed_event_correlations(estimate_bivariate(seq, 3, true), model.space()));
    }
    const PriceFlag flags[2] = {PriceFlag::Change, PriceFlag::NoChange};
    int outliers = 0;
    for (PriceFlag f1 : flags) {
        for (PriceFlag f2 : flags) {
            for (int l = 1; l <= 3; ++l) {
                double mean = 0.0;
                for (const auto& r : reps) mean += r.at(f1, f2, l);
                mean /= n_rep;
                double var = 0.0;
                for (const auto& r : reps) {
                    const double d = r.at(f1, f2, l) - mean;
                    var += d * d;
                }
                const double se = std::sqrt(var / (n_rep - 1));
                if (std::abs(reps[0].at(f1, f2, l) - theory.at(f1, f2, l)) > 4.0 * se) ++outliers;
            }
        }
    }
    CHECK(outliers <= 1);
}

TEST_CASE("signed_event_correlations: linear in the centered bivariate matrix") {
    auto model = random_centro_model(95, 2, 0.7);
    BivariateSet biv = theoretical_bivariate(model, 2);
    const Eigen::MatrixXd outer = biv.eta * biv.eta.transpose();

    BivariateSet scaled = biv;
    const double c = 0.37;
    for (int k = 1; k <= 2; ++k) scaled.b[static_cast<std::size_t>(k)] = outer + c * (biv.at(k) - outer);

    CorrelationSet base = signed_event_correlations(biv, model.space());
    CorrelationSet after = signed_event_correlations(scaled, model.space());
    const PriceFlag flags[2] = {PriceFlag::Change, PriceFlag::NoChange};
    for (PriceFlag f1 : flags)
        for (PriceFlag f2 : flags)
            for (int l = 1; l <= 2; ++l)
                CHECK(after.at(f1, f2, l) == doctest::Approx(c * base.at(f1, f2, l)).epsilon(1e-10));
}

TEST_CASE("centrosymmetric completion is a left inverse of extraction") {
    std::mt19937_64 rng(123);
    Eigen::VectorXd eta(4);
    const double e1 = 0.22;
    eta << e1, 0.5 - e1, 0.5 - e1, e1;
    for (int rep = 0; rep < 10; ++rep) {
        Eigen::VectorXd free5(5);
        for (int s = 0; s < 5; ++s) free5(s) = uniform(rng, 0.0, 0.1);
        Eigen::MatrixXd full = complete_bivariate_centro(free5, eta);
        CHECK((extract_bivariate_centro(full) - free5).cwiseAbs().maxCoeff() < 1e-15);
        CHECK((full - centro_flip(full)).cwiseAbs().maxCoeff() < 1e-15);
        CHECK((full.rowwise().sum() - eta).cwiseAbs().maxCoeff() < 1e-15);
    }
}

TEST_CASE("deviation completion yields zero row sums and eta annihilation") {
    std::mt19937_64 rng(321);
    for (int rep = 0; rep < 10; ++rep) {
        Eigen::VectorXd eta = random_eta(rng, 5);
        Eigen::MatrixXd free_block(4, 4);
        for (int i = 0; i < 4; ++i)
            for (int j = 0; j < 4; ++j) free_block(i, j) = uniform(rng, -1.0, 1.0);
        Eigen::MatrixXd a = complete_deviation(free_block, eta);
        CHECK(a.rowwise().sum().cwiseAbs().maxCoeff() < 1e-14);
        CHECK((eta.transpose() * a).cwiseAbs().maxCoeff() < 1e-14);
    }
}
