#include "mtdg/gmm.hpp"

#include <cmath>
#include <set>
#include <string>
#include <utility>

#include "mtdg/centro.hpp"
#include "mtdg/errors.hpp"
#include "mtdg/moments.hpp"
#include "mtdg/qp.hpp"
#include "mtdg/random.hpp"

namespace mtdg {

namespace {

constexpr std::uint64_t kStreamBootstrap = 0x61;

const std::array<std::pair<int, int>, 5>& biv_slots() { return kCentroBivariateSlots; }
const std::array<std::pair<int, int>, 5>& dev_slots() { return kCentroDeviationSlots; }

}  // namespace

GmmSystem build_gmm_system(const BivariateSet& biv, int p, bool symmetry,
                           const GmmBuildOptions& opts) {
    const int m = biv.m();
    if (p < 1) throw DomainError("gmm order p must be >= 1");
    if (m < 2) throw DomainError("gmm needs m >= 2");
    if (symmetry && m != 4) throw DomainError("the centrosymmetric reduction requires m = 4");
    if (biv.max_lag() < p)
        throw DomainError("bivariate set must cover lags 0.." + std::to_string(p));

    const Eigen::VectorXd& eta = biv.eta;
    for (int i = 0; i < m; ++i)
        if (eta(i) <= 0.0) throw DomainError("eta has a non-positive component");

    for (int k = 0; k <= p; ++k) {
        const Eigen::MatrixXd& bk = biv.at(k);
        const double row_err = (bk.rowwise().sum() - eta).cwiseAbs().maxCoeff();
        const double col_err = (bk.colwise().sum().transpose() - eta).cwiseAbs().maxCoeff();
        if (row_err > opts.marginal_tol || col_err > opts.marginal_tol)
            throw DomainError("bivariate marginals inconsistent with eta at lag " +
                              std::to_string(k) + " (error " +
                              std::to_string(std::max(row_err, col_err)) + ")");
        if (symmetry) {
            const double sym_err = (bk - centro_flip(bk)).cwiseAbs().maxCoeff();
            if (sym_err > opts.marginal_tol)
                throw DomainError("bivariate matrix at lag " + std::to_string(k) +
                                  " is not centrosymmetric (defect " + std::to_string(sym_err) + ")");
        }
    }

    GmmSystem sys;
    sys.p = p;
    sys.m = m;
    sys.symmetric = symmetry;
    sys.eta = eta;

    const int per = symmetry ? 5 : (m - 1) * (m - 1);
    const int n = p * per;
    sys.param_slots.reserve(static_cast<std::size_t>(n));
    for (int g = 1; g <= p; ++g) {
        if (symmetry) {
            for (const auto& [i, j] : dev_slots()) sys.param_slots.push_back({g, i, j});
        } else {
            for (int i = 1; i <= m - 1; ++i)
                for (int j = 1; j <= m - 1; ++j) sys.param_slots.push_back({g, i, j});
        }
    }

    const auto w = deviation_expansion(m, eta, symmetry);
    sys.d.resize(n);
    sys.k = Eigen::MatrixXd::Zero(n, n);
    sys.eq_slots.reserve(static_cast<std::size_t>(n));

    int row = 0;
    for (int k = 1; k <= p; ++k) {
        std::vector<std::pair<int, int>> eqs;
        if (symmetry) {
            eqs.assign(biv_slots().begin(), biv_slots().end());
        } else {
            for (int i = 1; i <= m - 1; ++i)
                for (int j = 1; j <= m - 1; ++j) eqs.emplace_back(i, j);
        }
        for (const auto& [i, j] : eqs) {
            sys.eq_slots.push_back({k, i, j});
            sys.d(row) = biv.at(k)(i - 1, j - 1) - eta(i - 1) * eta(j - 1);
            for (int g = 1; g <= p; ++g) {
                const Eigen::MatrixXd bprev = biv.at_signed(k - g);
                for (int s = 0; s < per; ++s) {
                    double coeff = 0.0;
                    for (int h = 0; h < m; ++h) {
                        const double wv = w[static_cast<std::size_t>(h)][static_cast<std::size_t>(j - 1)](s);
                        if (wv != 0.0) coeff += bprev(i - 1, h) * wv;
                    }
                    sys.k(row, (g - 1) * per + s) = coeff;
                }
            }
            ++row;
        }
    }
    return sys;
}

MtdgModel WeakModel::to_model() const {
    StateSpace space = (static_cast<int>(eta.size()) == 4) ? StateSpace::signed_events()
                                                           : StateSpace::plain(static_cast<int>(eta.size()));
    std::optional<Eigen::VectorXd> lam;
    if (has_factorization) lam = lambda;
    return MtdgModel::from_deviation(std::move(space), eta, a_stack, lam);
}

namespace {

// Materialize the full deviation stack encoded by the stacked parameter
// vector q through the expansion weights.
std::vector<Eigen::MatrixXd> stacks_from_q(const GmmSystem& sys,
                                           const std::vector<std::vector<Eigen::VectorXd>>& w,
                                           const Eigen::VectorXd& q) {
    const int m = sys.m;
    const int per = sys.params_per_lag();
    std::vector<Eigen::MatrixXd> a(static_cast<std::size_t>(sys.p));
    for (int g = 0; g < sys.p; ++g) {
        const Eigen::VectorXd slice = q.segment(g * per, per);
        Eigen::MatrixXd ag(m, m);
        for (int h = 0; h < m; ++h)
            for (int i = 0; i < m; ++i)
                ag(h, i) = w[static_cast<std::size_t>(h)][static_cast<std::size_t>(i)].dot(slice);
        a[static_cast<std::size_t>(g)] = std::move(ag);
    }
    return a;
}

}  // namespace

GmmSolution solve_weakly_constrained(const GmmSystem& sys, const GmmSolveOptions& opts) {
    const int n = sys.n_params();
    const int m = sys.m;
    const double eps = opts.eps_feas;

    for (int i = 0; i < m; ++i) {
        if (sys.eta(i) <= eps || sys.eta(i) >= 1.0 - eps)
            throw DomainError("eta_" + std::to_string(i + 1) +
                              " leaves no feasible room at margin eps_feas");
    }

    GmmSolveReport report;
    Eigen::MatrixXd h = 2.0 * (sys.k.transpose() * sys.k);
    const Eigen::VectorXd c = -2.0 * (sys.k.transpose() * sys.d);

    if (opts.compute_spectrum) {
        Eigen::BDCSVD<Eigen::MatrixXd> svd(sys.k);
        const auto& sv = svd.singularValues();
        const double smax = sv(0);
        const double smin = sv(sv.size() - 1);
        report.condition_estimate = smin > 0.0 ? smax / smin : std::numeric_limits<double>::infinity();
        const double rank_tol = smax * static_cast<double>(std::max(sys.k.rows(), sys.k.cols())) *
                                std::numeric_limits<double>::epsilon();
        report.rank = static_cast<int>((sv.array() > rank_tol).count());
        if (!(smin > smax * opts.cond_threshold)) {
            report.ridge = 1e-10 * h.trace() / (2.0 * n);
            h += 2.0 * report.ridge * Eigen::MatrixXd::Identity(n, n);
        }
    } else {
        // cheap definiteness probe; fall back to the ridge if the normal
        // matrix fails to factor
        Eigen::LLT<Eigen::MatrixXd> probe(h);
        if (probe.info() != Eigen::Success) {
            report.ridge = 1e-10 * h.trace() / (2.0 * n);
            h += 2.0 * report.ridge * Eigen::MatrixXd::Identity(n, n);
        }
    }

    const auto w = deviation_expansion(m, sys.eta, sys.symmetric);
    const int per = sys.params_per_lag();

    Eigen::MatrixXd cuts(0, n);
    Eigen::VectorXd rhs(0);
    std::set<std::string> cut_keys;
    Eigen::VectorXd q = Eigen::VectorXd::Zero(n);
    QpResult qp_res;

    for (int round = 1; round <= opts.max_cut_rounds; ++round) {
        report.cut_rounds = round;
        QpProblem qp{h, c, cuts, rhs};
        qp_res = solve_qp_active_set(qp, Eigen::VectorXd::Zero(n), {opts.qp_tol, 0});
        report.qp_iterations += qp_res.iterations;
        if (!qp_res.converged)
            throw OptimizationError("gmm qp did not converge (residual " +
                                    std::to_string((sys.d - sys.k * qp_res.x).norm()) + ")");
        q = qp_res.x;

        const auto a = stacks_from_q(sys, w, q);
        int added = 0;
        for (int i = 0; i < m; ++i) {
            double up = sys.eta(i);
            double dn = sys.eta(i);
            std::vector<int> arg_up(static_cast<std::size_t>(sys.p));
            std::vector<int> arg_dn(static_cast<std::size_t>(sys.p));
            for (int g = 0; g < sys.p; ++g) {
                Eigen::Index hi, lo;
                up += a[static_cast<std::size_t>(g)].col(i).maxCoeff(&hi);
                dn += a[static_cast<std::size_t>(g)].col(i).minCoeff(&lo);
                arg_up[static_cast<std::size_t>(g)] = static_cast<int>(hi);
                arg_dn[static_cast<std::size_t>(g)] = static_cast<int>(lo);
            }
            auto add_cut = [&](const std::vector<int>& tuple, double sign, double bound,
                               const char* tag) {
                std::string key = std::string(tag) + ":" + std::to_string(i);
                for (int hg : tuple) key += "," + std::to_string(hg);
                if (!cut_keys.insert(key).second)
                    throw OptimizationError("gmm separation re-emitted an enforced facet; "
                                            "constraint system is numerically degenerate");
                Eigen::RowVectorXd rowv = Eigen::RowVectorXd::Zero(n);
                for (int g = 0; g < sys.p; ++g) {
                    const Eigen::VectorXd& wv =
                        w[static_cast<std::size_t>(tuple[static_cast<std::size_t>(g)])]
                         [static_cast<std::size_t>(i)];
                    rowv.segment(g * per, per) += sign * wv.transpose();
                }
                cuts.conservativeResize(cuts.rows() + 1, Eigen::NoChange);
                cuts.row(cuts.rows() - 1) = rowv;
                rhs.conservativeResize(rhs.size() + 1);
                rhs(rhs.size() - 1) = bound;
                ++added;
            };
            if (up > 1.0 - eps + opts.violation_tol)
                add_cut(arg_up, +1.0, 1.0 - eps - sys.eta(i), "u");
            if (dn < eps - opts.violation_tol)
                add_cut(arg_dn, -1.0, sys.eta(i) - eps, "l");
        }
        report.cuts_generated = static_cast<int>(cuts.rows());
        if (added == 0) break;
        if (round == opts.max_cut_rounds)
            throw OptimizationError("gmm cut generation exceeded " +
                                    std::to_string(opts.max_cut_rounds) + " rounds");
    }

    report.objective = (sys.d - sys.k * q).squaredNorm();
    report.residual_norm = std::sqrt(report.objective);
    report.active_cuts = static_cast<int>(qp_res.active.size());
    report.boundary = report.active_cuts > 0;

    GmmSolution sol;
    sol.report = report;
    sol.model.eta = sys.eta;
    sol.model.symmetric = sys.symmetric;
    sol.model.a_stack.a = stacks_from_q(sys, w, q);
    return sol;
}

std::pair<Eigen::VectorXd, std::vector<Eigen::MatrixXd>> factorize_identifiable(WeakModel& model,
                                                                                double q21_value) {
    const int p = model.a_stack.p();
    if (q21_value == 0.0) throw IdentifiabilityError("the pinned qtilde_{2,1} must be nonzero");
    Eigen::VectorXd lambda(p);
    for (int g = 0; g < p; ++g) {
        const double a21 = model.a_stack.a[static_cast<std::size_t>(g)](1, 0);
        if (a21 == 0.0)
            throw IdentifiabilityError("a^g_{2,1} is zero for g = " + std::to_string(g + 1) +
                                       "; normalization on that slot is impossible");
        lambda(g) = a21 / q21_value;
    }
    const double s = lambda.sum();
    if (s == 0.0) throw IdentifiabilityError("lambda normalization constant vanished");
    lambda /= s;
    const double q21_eff = q21_value * s;

    std::vector<Eigen::MatrixXd> q_tilde(static_cast<std::size_t>(p));
    for (int g = 0; g < p; ++g)
        q_tilde[static_cast<std::size_t>(g)] = model.a_stack.a[static_cast<std::size_t>(g)] / lambda(g);

    model.has_factorization = true;
    model.lambda = lambda;
    model.q_tilde = q_tilde;
    model.q21_norm = q21_eff;
    return {lambda, q_tilde};
}

FeasibilityResult feasibility_check(const DeviationStack& a_stack, const Eigen::VectorXd& eta,
                                    double eps_feas) {
    const int m = static_cast<int>(eta.size());
    for (const auto& a : a_stack.a)
        if (a.rows() != m || a.cols() != m)
            throw DomainError("deviation stack shape does not match eta");
    FeasibilityResult res;
    res.upper_slack.resize(m);
    res.lower_slack.resize(m);
    for (int i = 0; i < m; ++i) {
        double up = eta(i);
        double dn = eta(i);
        for (const auto& a : a_stack.a) {
            up += a.col(i).maxCoeff();
            dn += a.col(i).minCoeff();
        }
        res.upper_slack(i) = 1.0 - eps_feas - up;
        res.lower_slack(i) = dn - eps_feas;
    }
    res.feasible = res.upper_slack.minCoeff() >= 0.0 && res.lower_slack.minCoeff() >= 0.0;
    return res;
}

GmmBootstrap bootstrap_gmm_errors(const EventSequence& seq, int p, bool symmetric,
                                  const GmmSolveOptions& solve_opts, int n_resamples,
                                  std::uint64_t seed) {
    if (n_resamples < 2) throw DomainError("bootstrap needs at least 2 resamples");
    const std::size_t n_days = seq.n_days();
    const int m = seq.space.m;

    GmmSolveOptions inner = solve_opts;
    inner.compute_spectrum = false;

    std::vector<std::vector<Eigen::MatrixXd>> draws;
    int failed = 0;
    for (int r = 0; r < n_resamples; ++r) {
        std::mt19937_64 rng(derive_seed(seed, kStreamBootstrap, static_cast<std::uint64_t>(r)));
        std::vector<std::size_t> days(n_days);
        for (auto& d : days) d = static_cast<std::size_t>(uniform01(rng) * static_cast<double>(n_days));
        try {
            EventSequence resampled = seq.resample_days(days);
            BivariateSet biv = estimate_bivariate(resampled, p, symmetric);
            GmmSystem sys = build_gmm_system(biv, p, symmetric);
            GmmSolution sol = solve_weakly_constrained(sys, inner);
            draws.push_back(sol.model.a_stack.a);
        } catch (const std::exception&) {
            ++failed;
        }
    }
    if (draws.size() < 2)
        throw OptimizationError("bootstrap produced fewer than 2 usable resamples");

    GmmBootstrap out;
    out.n_resamples = static_cast<int>(draws.size());
    out.n_failed = failed;
    out.stderr_a.assign(static_cast<std::size_t>(p), Eigen::MatrixXd::Zero(m, m));
    const double nn = static_cast<double>(draws.size());
    for (int g = 0; g < p; ++g) {
        Eigen::MatrixXd mean = Eigen::MatrixXd::Zero(m, m);
        for (const auto& d : draws) mean += d[static_cast<std::size_t>(g)];
        mean /= nn;
        Eigen::MatrixXd var = Eigen::MatrixXd::Zero(m, m);
        for (const auto& d : draws) {
            Eigen::MatrixXd diff = d[static_cast<std::size_t>(g)] - mean;
            var += diff.cwiseProduct(diff);
        }
        var /= (nn - 1.0);
        out.stderr_a[static_cast<std::size_t>(g)] = var.cwiseSqrt();
    }
    return out;
}

}  // namespace mtdg
