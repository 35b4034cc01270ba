#include "mtdg/mle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "mtdg/errors.hpp"
#include "mtdg/random.hpp"

namespace mtdg {

namespace {

constexpr std::uint64_t kStreamMleStart = 0x71;

Eigen::VectorXd power_law_lambda(double beta, int p) {
    Eigen::VectorXd lambda(p);
    for (int g = 1; g <= p; ++g) lambda(g - 1) = std::pow(static_cast<double>(g), -beta);
    lambda /= lambda.sum();
    return lambda;
}

Eigen::VectorXd strong_eta(double b1, double b2) {
    const double den = 1.0 - 2.0 * b1 + 2.0 * b2;
    Eigen::VectorXd eta(4);
    eta(0) = b2 / den;
    eta(1) = (1.0 - 2.0 * b1) / (2.0 * den);
    eta(2) = eta(1);
    eta(3) = eta(0);
    return eta;
}

}  // namespace

Eigen::Matrix<double, StrongParams::kDim, 1> StrongParams::to_vector() const {
    Eigen::Matrix<double, kDim, 1> v;
    v << beta, b1, b2, mu1, mu2, nu1, nu2, alpha11, alpha12, alpha21, alpha22;
    return v;
}

StrongParams StrongParams::from_vector(const Eigen::Matrix<double, kDim, 1>& v) {
    StrongParams t;
    t.beta = v(0);
    t.b1 = v(1);
    t.b2 = v(2);
    t.mu1 = v(3);
    t.mu2 = v(4);
    t.nu1 = v(5);
    t.nu2 = v(6);
    t.alpha11 = v(7);
    t.alpha12 = v(8);
    t.alpha21 = v(9);
    t.alpha22 = v(10);
    return t;
}

std::vector<std::string> StrongParams::violated_bounds(double eps_feas, double beta_max,
                                                       double alpha_max) const {
    std::vector<std::string> v;
    auto box = [&v](double x, double lo, double hi, const std::string& name) {
        if (!(x >= lo) || !(x <= hi))
            v.push_back(name + " = " + std::to_string(x) + " outside [" + std::to_string(lo) +
                        ", " + std::to_string(hi) + "]");
    };
    box(beta, 0.0, beta_max, "beta");
    box(b1, eps_feas, 0.5 - eps_feas, "B1");
    box(b2, eps_feas, 0.5 - eps_feas, "B2");
    box(mu1, -(b1 - eps_feas), b1 - eps_feas, "mu1");
    box(mu2, -(b2 - eps_feas), b2 - eps_feas, "mu2");
    box(nu1, -(0.5 - b1 - eps_feas), 0.5 - b1 - eps_feas, "nu1");
    box(nu2, -(0.5 - b2 - eps_feas), 0.5 - b2 - eps_feas, "nu2");
    box(alpha11, 0.0, alpha_max, "alpha11");
    box(alpha12, 0.0, alpha_max, "alpha12");
    box(alpha21, 0.0, alpha_max, "alpha21");
    box(alpha22, 0.0, alpha_max, "alpha22");
    return v;
}

MtdgModel build_strong_model(const StrongParams& theta, int p, double eps_feas) {
    if (p < 1) throw DomainError("model order p must be >= 1");
    const auto bad = theta.violated_bounds(eps_feas);
    if (!bad.empty()) throw DomainError("infeasible strong parameters: " + bad.front());

    const double a1 = 0.5 - theta.b1;
    const double a2 = 0.5 - theta.b2;
    Eigen::MatrixXd base(4, 4);
    base << theta.b1, a1, a1, theta.b1,  //
        theta.b2, a2, a2, theta.b2,      //
        theta.b2, a2, a2, theta.b2,      //
        theta.b1, a1, a1, theta.b1;

    std::vector<Eigen::MatrixXd> q_stack;
    q_stack.reserve(static_cast<std::size_t>(p));
    for (int g = 1; g <= p; ++g) {
        const double e11 = theta.mu1 * std::exp(-theta.alpha11 * g);
        const double e12 = theta.nu1 * std::exp(-theta.alpha12 * g);
        const double e21 = theta.mu2 * std::exp(-theta.alpha21 * g);
        const double e22 = theta.nu2 * std::exp(-theta.alpha22 * g);
        Eigen::MatrixXd dev(4, 4);
        dev << -e11, -e12, e12, e11,  //
            e21, e22, -e22, -e21,     //
            -e21, -e22, e22, e21,     //
            e11, e12, -e12, -e11;
        q_stack.push_back(base + dev);
    }
    return MtdgModel::from_mixture(StateSpace::signed_events(), power_law_lambda(theta.beta, p),
                                   std::move(q_stack), strong_eta(theta.b1, theta.b2));
}

StrongParams extract_strong_params(const MtdgModel& model) {
    if (model.m() != 4) throw DomainError("strong parametrization requires m = 4");
    if (model.p() < 2) throw DomainError("decay rates need p >= 2 to be identified");
    const auto& q = model.q_stack();
    const auto& lambda = model.lambda();

    StrongParams t;
    t.beta = std::log(lambda(0) / lambda(1)) / std::log(2.0);
    t.b1 = 0.5 * (q[0](0, 0) + q[0](0, 3));
    t.b2 = 0.5 * (q[0](1, 0) + q[0](1, 3));

    auto decay = [&q](int row, int col_neg, int col_pos, double& amp, double& rate) {
        const double v1 = 0.5 * (q[0](row, col_pos) - q[0](row, col_neg));
        const double v2 = 0.5 * (q[1](row, col_pos) - q[1](row, col_neg));
        if (std::abs(v1) < 1e-14) {
            amp = 0.0;
            rate = 0.0;
            return;
        }
        rate = std::log(v1 / v2);
        amp = v1 * std::exp(rate);
    };
    // signs per the deviation pattern: row 1 carries (-mu1, -nu1, +nu1, +mu1),
    // row 2 carries (+mu2, +nu2, -nu2, -mu2)
    decay(0, 0, 3, t.mu1, t.alpha11);
    decay(0, 1, 2, t.nu1, t.alpha12);
    decay(1, 3, 0, t.mu2, t.alpha21);
    decay(1, 2, 1, t.nu2, t.alpha22);
    return t;
}

double log_likelihood(const StrongParams& theta, int p, const EventSequence& seq, double eps_feas) {
    seq.check();
    if (seq.space.m != 4) throw DomainError("the strong parametrization requires m = 4 data");
    const auto bad = theta.violated_bounds(eps_feas);
    if (!bad.empty()) throw DomainError("infeasible strong parameters: " + bad.front());
    for (std::size_t d = 0; d < seq.n_days(); ++d) {
        auto [first, last] = seq.day_span(d);
        if (last - first <= static_cast<std::size_t>(p))
            throw DomainError("day " + std::to_string(d + 1) + " has no events beyond the order p");
    }

    const Eigen::VectorXd lambda = power_law_lambda(theta.beta, p);
    // flat stack: q[(g-1)*16 + (from-1)*4 + (to-1)], pre-multiplied by lambda_g
    std::vector<double> lq(static_cast<std::size_t>(p) * 16);
    {
        const double a1 = 0.5 - theta.b1;
        const double a2 = 0.5 - theta.b2;
        for (int g = 1; g <= p; ++g) {
            const double e11 = theta.mu1 * std::exp(-theta.alpha11 * g);
            const double e12 = theta.nu1 * std::exp(-theta.alpha12 * g);
            const double e21 = theta.mu2 * std::exp(-theta.alpha21 * g);
            const double e22 = theta.nu2 * std::exp(-theta.alpha22 * g);
            const double row1[4] = {theta.b1 - e11, a1 - e12, a1 + e12, theta.b1 + e11};
            const double row2[4] = {theta.b2 + e21, a2 + e22, a2 - e22, theta.b2 - e21};
            const double row3[4] = {theta.b2 - e21, a2 - e22, a2 + e22, theta.b2 + e21};
            const double row4[4] = {theta.b1 + e11, a1 + e12, a1 - e12, theta.b1 - e11};
            double* dst = lq.data() + static_cast<std::size_t>(g - 1) * 16;
            const double lg = lambda(g - 1);
            for (int j = 0; j < 4; ++j) {
                dst[0 * 4 + j] = lg * row1[j];
                dst[1 * 4 + j] = lg * row2[j];
                dst[2 * 4 + j] = lg * row3[j];
                dst[3 * 4 + j] = lg * row4[j];
            }
        }
    }

    double ll = 0.0;
    double chunk = 1.0;
    int in_chunk = 0;
    const std::int32_t* x = seq.states.data();
    for (std::size_t d = 0; d < seq.n_days(); ++d) {
        auto [first, last] = seq.day_span(d);
        for (std::size_t t = first + static_cast<std::size_t>(p); t < last; ++t) {
            const int to = x[t] - 1;
            double s = 0.0;
            const double* tab = lq.data() + to;
            for (int g = 1; g <= p; ++g)
                s += tab[static_cast<std::size_t>(g - 1) * 16 + static_cast<std::size_t>(x[t - static_cast<std::size_t>(g)] - 1) * 4];
            if (!(s > 0.0)) throw NumericError("conditional probability is not positive");
            chunk *= s;
            if (++in_chunk == 16) {
                ll += std::log(chunk);
                chunk = 1.0;
                in_chunk = 0;
            }
        }
    }
    if (in_chunk > 0) ll += std::log(chunk);
    return ll;
}

namespace {

struct Bounds {
    double eps;
    double beta_max;
    double alpha_max;
};

StrongParams sample_start(std::mt19937_64& rng, const Bounds& bd) {
    StrongParams t;
    t.beta = uniform(rng, 0.0, std::min(4.0, bd.beta_max));
    t.b1 = uniform(rng, 4.0 * bd.eps, 0.5 - 4.0 * bd.eps);
    t.b2 = uniform(rng, 4.0 * bd.eps, 0.5 - 4.0 * bd.eps);
    t.mu1 = uniform(rng, -0.9, 0.9) * (t.b1 - 2.0 * bd.eps);
    t.mu2 = uniform(rng, -0.9, 0.9) * (t.b2 - 2.0 * bd.eps);
    t.nu1 = uniform(rng, -0.9, 0.9) * (0.5 - t.b1 - 2.0 * bd.eps);
    t.nu2 = uniform(rng, -0.9, 0.9) * (0.5 - t.b2 - 2.0 * bd.eps);
    t.alpha11 = uniform(rng, 0.0, 1.0);
    t.alpha12 = uniform(rng, 0.0, 1.0);
    t.alpha21 = uniform(rng, 0.0, 1.0);
    t.alpha22 = uniform(rng, 0.0, 1.0);
    return t;
}

using ParamVec = Eigen::Matrix<double, StrongParams::kDim, 1>;

struct NelderMeadResult {
    ParamVec x;
    double f = std::numeric_limits<double>::infinity();
    int iterations = 0;
    bool converged = false;
    long evaluations = 0;
};

template <typename F>
NelderMeadResult nelder_mead(F&& f, const ParamVec& x0, const ParamVec& steps, double tol,
                             int max_iter) {
    constexpr int n = StrongParams::kDim;
    constexpr double rho = 1.0;                    // reflection
    constexpr double chi = 1.0 + 2.0 / n;          // expansion
    constexpr double gamma = 0.75 - 0.5 / n;       // contraction
    constexpr double sigma = 1.0 - 1.0 / n;        // shrink

    NelderMeadResult res;
    std::vector<ParamVec> xs(n + 1, x0);
    std::vector<double> fs(n + 1);
    for (int j = 0; j < n; ++j) xs[static_cast<std::size_t>(j + 1)](j) += steps(j);
    for (int j = 0; j <= n; ++j) {
        fs[static_cast<std::size_t>(j)] = f(xs[static_cast<std::size_t>(j)]);
        ++res.evaluations;
    }

    std::vector<int> order(n + 1);
    for (int it = 0; it < max_iter; ++it) {
        res.iterations = it + 1;
        std::iota(order.begin(), order.end(), 0);
        std::sort(order.begin(), order.end(), [&fs](int a, int b) {
            return fs[static_cast<std::size_t>(a)] < fs[static_cast<std::size_t>(b)];
        });
        const int best = order[0], worst = order[static_cast<std::size_t>(n)];
        const int second_worst = order[static_cast<std::size_t>(n - 1)];

        const double spread = fs[static_cast<std::size_t>(worst)] - fs[static_cast<std::size_t>(best)];
        if (std::isfinite(fs[static_cast<std::size_t>(worst)]) &&
            spread <= tol * (std::abs(fs[static_cast<std::size_t>(best)]) + 1.0)) {
            res.converged = true;
            break;
        }

        ParamVec centroid = ParamVec::Zero();
        for (int j = 0; j <= n; ++j)
            if (j != worst) centroid += xs[static_cast<std::size_t>(j)];
        centroid /= static_cast<double>(n);

        auto eval = [&](const ParamVec& x) {
            ++res.evaluations;
            return f(x);
        };

        const ParamVec xr = centroid + rho * (centroid - xs[static_cast<std::size_t>(worst)]);
        const double fr = eval(xr);
        if (fr < fs[static_cast<std::size_t>(best)]) {
            const ParamVec xe = centroid + chi * (xr - centroid);
            const double fe = eval(xe);
            if (fe < fr) {
                xs[static_cast<std::size_t>(worst)] = xe;
                fs[static_cast<std::size_t>(worst)] = fe;
            } else {
                xs[static_cast<std::size_t>(worst)] = xr;
                fs[static_cast<std::size_t>(worst)] = fr;
            }
        } else if (fr < fs[static_cast<std::size_t>(second_worst)]) {
            xs[static_cast<std::size_t>(worst)] = xr;
            fs[static_cast<std::size_t>(worst)] = fr;
        } else {
            const bool outside = fr < fs[static_cast<std::size_t>(worst)];
            ParamVec xc;
            if (outside)
                xc = centroid + gamma * (xr - centroid);
            else
                xc = centroid - gamma * (centroid - xs[static_cast<std::size_t>(worst)]);
            const double fc = eval(xc);
            if (fc < std::min(fr, fs[static_cast<std::size_t>(worst)])) {
                xs[static_cast<std::size_t>(worst)] = xc;
                fs[static_cast<std::size_t>(worst)] = fc;
            } else {
                for (int j = 0; j <= n; ++j) {
                    if (j == best) continue;
                    xs[static_cast<std::size_t>(j)] =
                        xs[static_cast<std::size_t>(best)] +
                        sigma * (xs[static_cast<std::size_t>(j)] - xs[static_cast<std::size_t>(best)]);
                    fs[static_cast<std::size_t>(j)] = eval(xs[static_cast<std::size_t>(j)]);
                }
            }
        }
    }

    int best = 0;
    for (int j = 1; j <= n; ++j)
        if (fs[static_cast<std::size_t>(j)] < fs[static_cast<std::size_t>(best)]) best = j;
    res.x = xs[static_cast<std::size_t>(best)];
    res.f = fs[static_cast<std::size_t>(best)];
    return res;
}

}  // namespace

MleFit fit_mle(const EventSequence& seq, int p, const MleOptions& opts) {
    seq.check();
    if (seq.size() < static_cast<std::size_t>(100) * static_cast<std::size_t>(p))
        throw DomainError("sequence too short: fit_mle needs at least 100 * p events");
    if (opts.starts < 1) throw DomainError("fit_mle needs at least one start");

    const Bounds bd{opts.eps_feas, opts.beta_max, opts.alpha_max};
    auto objective = [&](const ParamVec& v) -> double {
        const StrongParams t = StrongParams::from_vector(v);
        if (!t.violated_bounds(bd.eps, bd.beta_max, bd.alpha_max).empty())
            return std::numeric_limits<double>::infinity();
        return -log_likelihood(t, p, seq, bd.eps);
    };

    ParamVec steps;
    steps << 0.3, 0.05, 0.05, 0.03, 0.03, 0.05, 0.05, 0.2, 0.2, 0.2, 0.2;

    MleFit fit;
    fit.report.start_log_lik.resize(static_cast<std::size_t>(opts.starts));
    fit.report.start_iterations.resize(static_cast<std::size_t>(opts.starts));
    double best_f = std::numeric_limits<double>::infinity();
    ParamVec best_x = ParamVec::Zero();
    bool any_feasible = false;

    for (int s = 0; s < opts.starts; ++s) {
        StrongParams start;
        if (s > 0) {
            std::mt19937_64 rng(derive_seed(opts.seed, kStreamMleStart, static_cast<std::uint64_t>(s)));
            start = sample_start(rng, bd);
        }
        if (!start.violated_bounds(bd.eps, bd.beta_max, bd.alpha_max).empty()) {
            fit.report.start_log_lik[static_cast<std::size_t>(s)] =
                -std::numeric_limits<double>::infinity();
            continue;
        }
        any_feasible = true;
        NelderMeadResult r = nelder_mead(objective, start.to_vector(), steps, opts.tol, opts.max_iter);
        fit.report.start_log_lik[static_cast<std::size_t>(s)] = -r.f;
        fit.report.start_iterations[static_cast<std::size_t>(s)] = r.iterations;
        fit.report.evaluations += r.evaluations;
        if (r.f < best_f) {
            best_f = r.f;
            best_x = r.x;
            fit.report.winner_start = s;
            fit.report.converged = r.converged;
        }
    }
    if (!any_feasible || !std::isfinite(best_f))
        throw OptimizationError("fit_mle found no feasible start");

    // polish the winner with a fresh small simplex around it
    NelderMeadResult polish = nelder_mead(objective, best_x, ParamVec(0.1 * steps), opts.tol,
                                          opts.max_iter);
    fit.report.evaluations += polish.evaluations;
    if (polish.f < best_f) {
        best_f = polish.f;
        best_x = polish.x;
        fit.report.converged = polish.converged;
    }

    fit.theta = StrongParams::from_vector(best_x);
    fit.report.log_lik = -best_f;

    const StrongParams& t = fit.theta;
    const double tol_b = 1e-6;
    auto near = [tol_b](double x, double bound) { return std::abs(x - bound) <= tol_b; };
    auto flag_box = [&](double x, double lo, double hi, const std::string& name) {
        if (near(x, lo)) fit.report.boundary.push_back(name + " at lower bound");
        if (near(x, hi)) fit.report.boundary.push_back(name + " at upper bound");
    };
    flag_box(t.beta, 0.0, opts.beta_max, "beta");
    flag_box(t.b1, opts.eps_feas, 0.5 - opts.eps_feas, "B1");
    flag_box(t.b2, opts.eps_feas, 0.5 - opts.eps_feas, "B2");
    flag_box(t.mu1, -(t.b1 - opts.eps_feas), t.b1 - opts.eps_feas, "mu1");
    flag_box(t.mu2, -(t.b2 - opts.eps_feas), t.b2 - opts.eps_feas, "mu2");
    flag_box(t.nu1, -(0.5 - t.b1 - opts.eps_feas), 0.5 - t.b1 - opts.eps_feas, "nu1");
    flag_box(t.nu2, -(0.5 - t.b2 - opts.eps_feas), 0.5 - t.b2 - opts.eps_feas, "nu2");
    flag_box(t.alpha11, 0.0, opts.alpha_max, "alpha11");
    flag_box(t.alpha12, 0.0, opts.alpha_max, "alpha12");
    flag_box(t.alpha21, 0.0, opts.alpha_max, "alpha21");
    flag_box(t.alpha22, 0.0, opts.alpha_max, "alpha22");
    return fit;
}

}  // namespace mtdg
