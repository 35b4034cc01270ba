#include <doctest.h>

#include <cmath>

#include "mtdg/errors.hpp"
#include "mtdg/gmm.hpp"
#include "mtdg/moments.hpp"
#include "mtdg/qp.hpp"
#include "support/qp_oracles.hpp"
#include "support/test_support.hpp"

using namespace mtdg;
using namespace mtdg::testsupport;

namespace {

// stacked free-parameter vector of a solution, in the system's slot order
Eigen::VectorXd stacked_params(const GmmSystem& sys, const WeakModel& model) {
    Eigen::VectorXd q(sys.n_params());
    for (int c = 0; c < sys.n_params(); ++c) {
        const auto& slot = sys.param_slots[static_cast<std::size_t>(c)];
        q(c) = model.a_stack.a[static_cast<std::size_t>(slot.outer - 1)](slot.i - 1, slot.j - 1);
    }
    return q;
}

}  // namespace

TEST_CASE("active-set qp: unconstrained optimum inside the feasible set") {
    QpProblem qp;
    qp.h = Eigen::MatrixXd::Identity(2, 2) * 2.0;
    qp.c = Eigen::VectorXd(2);
    qp.c << -2.0, -4.0;  // minimizer (1, 2)
    qp.a = Eigen::MatrixXd(1, 2);
    qp.a << 1.0, 1.0;
    qp.b = Eigen::VectorXd(1);
    qp.b << 10.0;
    QpResult res = solve_qp_active_set(qp, Eigen::VectorXd::Zero(2));
    REQUIRE(res.converged);
    CHECK(res.x(0) == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(res.x(1) == doctest::Approx(2.0).epsilon(1e-9));
    CHECK(res.active.empty());
}

TEST_CASE("active-set qp: constrained optimum is the projection onto the binding plane") {
    // min ||x - (1, 2)||^2 s.t. x1 + x2 <= 1 -> x = (0, 1)
    QpProblem qp;
    qp.h = Eigen::MatrixXd::Identity(2, 2) * 2.0;
    qp.c = Eigen::VectorXd(2);
    qp.c << -2.0, -4.0;
    qp.a = Eigen::MatrixXd(1, 2);
    qp.a << 1.0, 1.0;
    qp.b = Eigen::VectorXd(1);
    qp.b << 1.0;
    QpResult res = solve_qp_active_set(qp, Eigen::VectorXd::Zero(2));
    REQUIRE(res.converged);
    CHECK(res.x(0) == doctest::Approx(0.0).epsilon(1e-9));
    CHECK(res.x(1) == doctest::Approx(1.0).epsilon(1e-9));
    REQUIRE(res.active.size() == 1);
    CHECK(res.multipliers(0) > 0.0);
}

TEST_CASE("active-set qp: multiple constraints with a vertex solution") {
    // min (x1-3)^2 + (x2-3)^2 s.t. x1 <= 1, x2 <= 2 -> (1, 2)
    QpProblem qp;
    qp.h = Eigen::MatrixXd::Identity(2, 2) * 2.0;
    qp.c = Eigen::VectorXd(2);
    qp.c << -6.0, -6.0;
    qp.a = Eigen::MatrixXd(2, 2);
    qp.a << 1.0, 0.0, 0.0, 1.0;
    qp.b = Eigen::VectorXd(2);
    qp.b << 1.0, 2.0;
    QpResult res = solve_qp_active_set(qp, Eigen::VectorXd::Zero(2));
    REQUIRE(res.converged);
    CHECK(res.x(0) == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(res.x(1) == doctest::Approx(2.0).epsilon(1e-9));
    CHECK(res.active.size() == 2);
}

TEST_CASE("build_gmm_system: dimension facts") {
    SUBCASE("m=4, p=100 centrosymmetric system is 500 x 500") {
        Eigen::VectorXd eta(4);
        eta << 0.22, 0.28, 0.28, 0.22;
        DeviationStack stack;
        for (int g = 0; g < 100; ++g) stack.a.push_back(Eigen::MatrixXd::Zero(4, 4));
        auto model = MtdgModel::from_deviation(StateSpace::signed_events(), eta, stack);
        BivariateSet biv = theoretical_bivariate(model, 100);
        GmmSystem sys = build_gmm_system(biv, 100, true);
        CHECK(sys.n_equations() == 500);
        CHECK(sys.n_params() == 500);
    }
    SUBCASE("general system has p (m^2 - 2m + 1) equations") {
        for (int m : {2, 3, 4}) {
            for (int p : {1, 3}) {
                auto model = random_valid_model(500 + static_cast<std::uint64_t>(10 * m + p), m, p, 0.5);
                BivariateSet biv = theoretical_bivariate(model, p);
                GmmSystem sys = build_gmm_system(biv, p, false);
                CHECK(sys.n_equations() == p * (m * m - 2 * m + 1));
                CHECK(sys.n_params() == p * (m - 1) * (m - 1));
            }
        }
    }
}

TEST_CASE("build_gmm_system: m=2 p=1 solves by hand to a = lambda qtilde") {
    // order-1 two-state chain: K is the 1x1 matrix [eta_1], d = b11 - eta_1^2,
    // so a_{11} = (b11 - eta_1^2) / eta_1 = qtilde_{11} (lambda_1 = 1)
    Eigen::VectorXd eta(2);
    eta << 0.6, 0.4;
    Eigen::MatrixXd qt(2, 2);
    qt << 0.2, -0.2, -0.3, 0.3;
    Eigen::VectorXd lambda(1);
    lambda << 1.0;
    Eigen::MatrixXd q = Eigen::VectorXd::Ones(2) * eta.transpose() + qt;
    auto model = MtdgModel::from_mixture(StateSpace::plain(2), lambda, {q}, eta);
    BivariateSet biv = theoretical_bivariate(model, 1);

    GmmSystem sys = build_gmm_system(biv, 1, false);
    REQUIRE(sys.n_params() == 1);
    CHECK(sys.k(0, 0) == doctest::Approx(eta(0)).epsilon(1e-12));
    CHECK(sys.d(0) == doctest::Approx(biv.at(1)(0, 0) - eta(0) * eta(0)).epsilon(1e-12));
    const double a11 = sys.d(0) / sys.k(0, 0);
    CHECK(a11 == doctest::Approx(qt(0, 0)).epsilon(1e-10));
}

TEST_CASE("build_gmm_system: inconsistent marginals raise a domain error") {
    auto model = random_valid_model(510, 3, 2, 0.5);
    BivariateSet biv = theoretical_bivariate(model, 2);
    biv.b[1](0, 0) += 0.05;  // break the marginal identity
    CHECK_THROWS_AS((void)build_gmm_system(biv, 2, false), DomainError);
}

TEST_CASE("solve_weakly_constrained: zero moment vector gives the zero stack") {
    Eigen::VectorXd eta(4);
    eta << 0.2, 0.3, 0.3, 0.2;
    DeviationStack stack;
    for (int g = 0; g < 3; ++g) stack.a.push_back(Eigen::MatrixXd::Zero(4, 4));
    auto model = MtdgModel::from_deviation(StateSpace::signed_events(), eta, stack);
    BivariateSet biv = theoretical_bivariate(model, 3);
    GmmSystem sys = build_gmm_system(biv, 3, true);
    CHECK(sys.d.cwiseAbs().maxCoeff() < 1e-14);
    GmmSolution sol = solve_weakly_constrained(sys);
    for (const auto& a : sol.model.a_stack.a) CHECK(a.cwiseAbs().maxCoeff() < 1e-10);
    CHECK_FALSE(sol.report.boundary);
}

TEST_CASE("solve_weakly_constrained: exact theoretical moments are a fixed point") {
    for (std::uint64_t seed : {601ULL, 602ULL, 603ULL}) {
        auto model = random_centro_model(seed, 4, 0.55);
        BivariateSet biv = theoretical_bivariate(model, 4);
        GmmSystem sys = build_gmm_system(biv, 4, true);
        GmmSolution sol = solve_weakly_constrained(sys);
        CHECK(sol.report.residual_norm < 1e-8);
        for (int g = 0; g < 4; ++g)
            CHECK((sol.model.a_stack.a[static_cast<std::size_t>(g)] -
                   model.a_stack().a[static_cast<std::size_t>(g)])
                      .cwiseAbs()
                      .maxCoeff() < 1e-8);
    }
    // the general (non-symmetric) route has the same fixed point
    auto model = random_valid_model(604, 3, 3, 0.5);
    BivariateSet biv = theoretical_bivariate(model, 3);
    GmmSystem sys = build_gmm_system(biv, 3, false);
    GmmSolution sol = solve_weakly_constrained(sys);
    CHECK(sol.report.residual_norm < 1e-8);
    for (int g = 0; g < 3; ++g)
        CHECK((sol.model.a_stack.a[static_cast<std::size_t>(g)] -
               model.a_stack().a[static_cast<std::size_t>(g)])
                  .cwiseAbs()
                  .maxCoeff() < 1e-8);
}

TEST_CASE("solve_weakly_constrained: infeasible unconstrained optimum lands on the boundary") {
    // inflate the exact moment vector so the unconstrained minimizer scales
    // past the probability bounds; the constrained solution must then bind
    // with a strictly positive residual
    auto model = random_centro_model(611, 3, 0.8);
    BivariateSet biv = theoretical_bivariate(model, 3);
    GmmSystem sys = build_gmm_system(biv, 3, true);
    sys.d *= 1.8;

    Eigen::VectorXd q_unc = sys.k.colPivHouseholderQr().solve(sys.d);
    const auto w = deviation_expansion(4, sys.eta, true);
    DeviationStack unc_stack;
    for (int g = 0; g < 3; ++g) {
        Eigen::MatrixXd ag(4, 4);
        for (int h = 0; h < 4; ++h)
            for (int i = 0; i < 4; ++i)
                ag(h, i) = w[static_cast<std::size_t>(h)][static_cast<std::size_t>(i)].dot(
                    q_unc.segment(5 * g, 5));
        unc_stack.a.push_back(ag);
    }
    CHECK_FALSE(feasibility_check(unc_stack, sys.eta, 1e-6).feasible);

    GmmSolution sol = solve_weakly_constrained(sys);
    CHECK(sol.report.boundary);
    CHECK(sol.report.residual_norm > 1e-6);
    FeasibilityResult feas = feasibility_check(sol.model.a_stack, sys.eta, 1e-6 - 1e-12);
    CHECK(feas.feasible);
    const double min_slack =
        std::min(feas.upper_slack.minCoeff(), feas.lower_slack.minCoeff());
    CHECK(min_slack < 1e-8);  // sits on the margin boundary
}

TEST_CASE("solve_weakly_constrained: eta at the margin is rejected") {
    GmmSystem sys;
    sys.p = 1;
    sys.m = 2;
    sys.symmetric = false;
    sys.eta = Eigen::VectorXd(2);
    sys.eta << 1e-7, 1.0 - 1e-7;
    sys.d = Eigen::VectorXd::Zero(1);
    sys.k = Eigen::MatrixXd::Identity(1, 1);
    CHECK_THROWS_AS((void)solve_weakly_constrained(sys), DomainError);
}

TEST_CASE("solver minimizer matches grid search and the literal epigraph QP (m=2, p=2)") {
    // build a consistent m=2, p=2 system, then push d outward so the
    // constraints actually bind
    auto model = random_valid_model(620, 2, 2, 0.7);
    BivariateSet biv = theoretical_bivariate(model, 2);
    GmmSystem sys = build_gmm_system(biv, 2, false);
    REQUIRE(sys.n_params() == 2);
    sys.d *= 2.5;

    GmmSolution sol = solve_weakly_constrained(sys);
    const Eigen::VectorXd q_sol = stacked_params(sys, sol.model);
    Eigen::VectorXd q_grid = grid_search_qp_2d(sys, 1e-6);
    CHECK((q_sol - q_grid).cwiseAbs().maxCoeff() < 1e-6);

    Eigen::VectorXd q_epi = epigraph_qp(sys, 1e-6);
    CHECK((q_sol - q_epi).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("convexity of the objective and the max/min constraint maps") {
    std::mt19937_64 rng(77);
    auto model = random_centro_model(630, 3, 0.5);
    BivariateSet biv = theoretical_bivariate(model, 3);
    GmmSystem sys = build_gmm_system(biv, 3, true);
    const int n = sys.n_params();
    const auto w = deviation_expansion(sys.m, sys.eta, true);

    auto objective = [&](const Eigen::VectorXd& q) { return (sys.d - sys.k * q).squaredNorm(); };
    auto constraint_fn = [&](const Eigen::VectorXd& q, int i) {
        double up = 0.0;
        for (int g = 0; g < sys.p; ++g) {
            double mx = -1e300;
            for (int h = 0; h < sys.m; ++h)
                mx = std::max(mx, w[static_cast<std::size_t>(h)][static_cast<std::size_t>(i)].dot(
                                      q.segment(5 * g, 5)));
            up += mx;
        }
        return up;
    };

    for (int rep = 0; rep < 100; ++rep) {
        Eigen::VectorXd q1(n), q2(n);
        for (int j = 0; j < n; ++j) {
            q1(j) = uniform(rng, -0.2, 0.2);
            q2(j) = uniform(rng, -0.2, 0.2);
        }
        for (double theta : {0.0, 0.25, 0.5, 0.75, 1.0}) {
            const Eigen::VectorXd qm = theta * q1 + (1.0 - theta) * q2;
            CHECK(objective(qm) <= theta * objective(q1) + (1.0 - theta) * objective(q2) + 1e-9);
            for (int i = 0; i < sys.m; ++i)
                CHECK(constraint_fn(qm, i) <=
                      theta * constraint_fn(q1, i) + (1.0 - theta) * constraint_fn(q2, i) + 1e-9);
        }
    }
}

TEST_CASE("factorize_identifiable: equal stacks give uniform lambda") {
    Eigen::VectorXd eta(4);
    eta << 0.2, 0.3, 0.3, 0.2;
    Eigen::VectorXd free5(5);
    free5 << 0.01, -0.02, 0.03, 0.015, -0.01;
    WeakModel model;
    model.eta = eta;
    model.symmetric = true;
    for (int g = 0; g < 4; ++g) model.a_stack.a.push_back(complete_deviation_centro(free5, eta));
    auto [lambda, q_tilde] = factorize_identifiable(model, 0.1);
    for (int g = 0; g < 4; ++g) CHECK(lambda(g) == doctest::Approx(0.25).epsilon(1e-12));
}

TEST_CASE("factorize_identifiable: different normalizations recompose identically") {
    auto gen = random_centro_model(640, 3, 0.6);
    WeakModel model;
    model.eta = gen.eta();
    model.a_stack = gen.a_stack();
    model.symmetric = true;

    WeakModel m1 = model, m2 = model;
    auto [l1, qt1] = factorize_identifiable(m1, 0.05);
    auto [l2, qt2] = factorize_identifiable(m2, -0.2);
    CHECK(l1.sum() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(l2.sum() == doctest::Approx(1.0).epsilon(1e-12));
    for (int g = 0; g < 3; ++g) {
        const Eigen::MatrixXd rec1 = l1(g) * qt1[static_cast<std::size_t>(g)];
        const Eigen::MatrixXd rec2 = l2(g) * qt2[static_cast<std::size_t>(g)];
        CHECK((rec1 - model.a_stack.a[static_cast<std::size_t>(g)]).cwiseAbs().maxCoeff() < 1e-12);
        CHECK((rec2 - model.a_stack.a[static_cast<std::size_t>(g)]).cwiseAbs().maxCoeff() < 1e-12);
    }
    // both factorizations define the same conditional law
    auto model1 = MtdgModel::from_deviation(StateSpace::signed_events(), m1.eta, m1.a_stack, l1);
    auto model2 = MtdgModel::from_deviation(StateSpace::signed_events(), m2.eta, m2.a_stack, l2);
    std::vector<std::int32_t> hist{2, 4, 1};
    CHECK((conditional_distribution(model1, hist) - conditional_distribution(model2, hist))
              .cwiseAbs()
              .maxCoeff() < 1e-14);
}

TEST_CASE("factorize_identifiable: zero a21 slot raises an identifiability error") {
    Eigen::VectorXd eta(4);
    eta << 0.25, 0.25, 0.25, 0.25;
    WeakModel model;
    model.eta = eta;
    Eigen::VectorXd free5 = Eigen::VectorXd::Zero(5);
    free5(0) = 0.01;  // a21 stays zero
    model.a_stack.a.push_back(complete_deviation_centro(free5, eta));
    CHECK_THROWS_AS((void)factorize_identifiable(model, 0.1), IdentifiabilityError);
}

TEST_CASE("feasibility_check: zero stack slack equals the eta margins") {
    Eigen::VectorXd eta(4);
    eta << 0.15, 0.35, 0.3, 0.2;
    DeviationStack stack;
    for (int g = 0; g < 2; ++g) stack.a.push_back(Eigen::MatrixXd::Zero(4, 4));
    const double eps = 1e-6;
    FeasibilityResult res = feasibility_check(stack, eta, eps);
    CHECK(res.feasible);
    CHECK(res.lower_slack.minCoeff() == doctest::Approx(eta.minCoeff() - eps).epsilon(1e-12));
    CHECK(res.upper_slack.minCoeff() == doctest::Approx(1.0 - eta.maxCoeff() - eps).epsilon(1e-12));
}

TEST_CASE("feasibility_check: stack scaled to the bound reports zero slack") {
    std::mt19937_64 rng(650);
    Eigen::VectorXd eta = random_eta(rng, 4);
    DeviationStack stack = random_deviation_stack(rng, eta, 3, 1.0, 1e-6);  // exactly at margin
    FeasibilityResult res = feasibility_check(stack, eta, 1e-6);
    const double min_slack = std::min(res.upper_slack.minCoeff(), res.lower_slack.minCoeff());
    CHECK(std::abs(min_slack) < 1e-12);
}

TEST_CASE("feasibility_check: unconstrained estimate with negative probabilities fails") {
    // mirror of the failure mode the constraints exist for: an unconstrained
    // least-squares solve on overscaled moments yields conditional
    // probabilities outside [0, 1]
    auto model = random_centro_model(660, 2, 0.9);
    BivariateSet biv = theoretical_bivariate(model, 2);
    GmmSystem sys = build_gmm_system(biv, 2, true);
    sys.d *= 2.0;
    Eigen::VectorXd q_unc = sys.k.colPivHouseholderQr().solve(sys.d);
    const auto w = deviation_expansion(4, sys.eta, true);
    DeviationStack stack;
    for (int g = 0; g < 2; ++g) {
        Eigen::MatrixXd ag(4, 4);
        for (int h = 0; h < 4; ++h)
            for (int i = 0; i < 4; ++i)
                ag(h, i) = w[static_cast<std::size_t>(h)][static_cast<std::size_t>(i)].dot(
                    q_unc.segment(5 * g, 5));
        stack.a.push_back(ag);
    }
    CHECK_FALSE(feasibility_check(stack, sys.eta, 1e-6).feasible);
}

TEST_CASE("bootstrap_gmm_errors: deterministic and positive on simulated data") {
    auto model = random_centro_model(670, 2, 0.5);
    EventSequence seq = simulate_days(model, 6, 3000, 9);
    GmmBootstrap a = bootstrap_gmm_errors(seq, 2, true, {}, 20, 77);
    GmmBootstrap b = bootstrap_gmm_errors(seq, 2, true, {}, 20, 77);
    CHECK(a.n_resamples == b.n_resamples);
    for (int g = 0; g < 2; ++g) {
        CHECK((a.stderr_a[static_cast<std::size_t>(g)] - b.stderr_a[static_cast<std::size_t>(g)])
                  .cwiseAbs()
                  .maxCoeff() == 0.0);
        CHECK(a.stderr_a[static_cast<std::size_t>(g)].minCoeff() >= 0.0);
        CHECK(a.stderr_a[static_cast<std::size_t>(g)].maxCoeff() > 0.0);
    }
}
