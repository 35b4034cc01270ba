#include "mtdg/model.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

#include "mtdg/errors.hpp"
#include "mtdg/random.hpp"

namespace mtdg {

namespace {

constexpr std::uint64_t kStreamSimulate = 0x51;
constexpr std::uint64_t kStreamSimulateDay = 0x52;

std::string fmt(double x) {
    std::ostringstream os;
    os.precision(6);
    os << x;
    return os.str();
}

Eigen::VectorXd left_unit_eigenvector(const Eigen::MatrixXd& q) {
    // kernel of (Q^T - I), normalized to sum 1
    const auto n = q.rows();
    Eigen::MatrixXd a = q.transpose() - Eigen::MatrixXd::Identity(n, n);
    Eigen::FullPivLU<Eigen::MatrixXd> lu(a);
    lu.setThreshold(1e-10);
    Eigen::MatrixXd kernel = lu.kernel();
    if (kernel.cols() < 1) throw NumericError("no stationary eigenvector found");
    Eigen::VectorXd eta = kernel.col(0);
    double s = eta.sum();
    if (std::abs(s) < 1e-14) throw NumericError("degenerate stationary eigenvector");
    eta /= s;
    return eta;
}

void check_shapes(const StateSpace& space, const Eigen::VectorXd& lambda,
                  const std::vector<Eigen::MatrixXd>& stack) {
    space.check();
    const int m = space.m;
    const int p = static_cast<int>(stack.size());
    if (p < 1) throw DomainError("model order p must be >= 1");
    if (lambda.size() != p) throw DomainError("lambda length must equal p");
    for (const auto& mat : stack) {
        if (mat.rows() != m || mat.cols() != m)
            throw DomainError("transition stack matrices must be m x m");
        if (!mat.allFinite()) throw DomainError("transition stack contains non-finite entries");
    }
    if (!lambda.allFinite()) throw DomainError("lambda contains non-finite entries");
}

void check_eta(const Eigen::VectorXd& eta, int m) {
    if (eta.size() != m) throw DomainError("eta length must equal m");
    if (!eta.allFinite()) throw DomainError("eta contains non-finite entries");
    for (int i = 0; i < m; ++i)
        if (eta(i) <= 0.0)
            throw DomainError("eta must be strictly positive (component " + std::to_string(i + 1) +
                              " is " + fmt(eta(i)) + ")");
    if (std::abs(eta.sum() - 1.0) > 1e-10) throw DomainError("eta must sum to 1");
}

}  // namespace

MtdgModel MtdgModel::from_mixture(StateSpace space, Eigen::VectorXd lambda,
                                  std::vector<Eigen::MatrixXd> q_stack,
                                  std::optional<Eigen::VectorXd> eta) {
    check_shapes(space, lambda, q_stack);
    const int m = space.m;
    const int p = static_cast<int>(q_stack.size());

    MtdgModel model;
    model.space_ = std::move(space);
    model.p_ = p;
    model.representation_ = Representation::Mixture;
    model.lambda_ = std::move(lambda);
    if (eta.has_value()) {
        model.eta_ = std::move(*eta);
    } else {
        Eigen::MatrixXd avg = Eigen::MatrixXd::Zero(m, m);
        for (const auto& q : q_stack) avg += q;
        avg /= static_cast<double>(p);
        model.eta_ = left_unit_eigenvector(avg);
    }
    check_eta(model.eta_, m);
    model.q_stack_ = std::move(q_stack);
    model.a_stack_.a.reserve(static_cast<std::size_t>(p));
    const Eigen::MatrixXd outer = Eigen::VectorXd::Ones(m) * model.eta_.transpose();
    for (int g = 0; g < p; ++g)
        model.a_stack_.a.push_back(model.lambda_(g) * (model.q_stack_[static_cast<std::size_t>(g)] - outer));
    return model;
}

MtdgModel MtdgModel::from_deviation(StateSpace space, Eigen::VectorXd eta, DeviationStack a_stack,
                                    std::optional<Eigen::VectorXd> lambda) {
    const int p = a_stack.p();
    Eigen::VectorXd lam = lambda.value_or(Eigen::VectorXd::Constant(p, 1.0 / p));
    check_shapes(space, lam, a_stack.a);
    check_eta(eta, space.m);

    MtdgModel model;
    model.space_ = std::move(space);
    model.p_ = p;
    model.representation_ = Representation::Deviation;
    model.lambda_ = std::move(lam);
    model.eta_ = std::move(eta);
    const int m = model.space_.m;
    const Eigen::MatrixXd outer = Eigen::VectorXd::Ones(m) * model.eta_.transpose();
    model.q_stack_.reserve(static_cast<std::size_t>(p));
    for (int g = 0; g < p; ++g) {
        const Eigen::MatrixXd& a = a_stack.a[static_cast<std::size_t>(g)];
        const double lg = model.lambda_(g);
        if (lg == 0.0) {
            if (a.cwiseAbs().maxCoeff() > 1e-14)
                throw DomainError("lambda_" + std::to_string(g + 1) +
                                  " = 0 with a nonzero deviation matrix has no mixture form");
            model.q_stack_.push_back(outer);
        } else {
            model.q_stack_.push_back(outer + a / lg);
        }
    }
    model.a_stack_ = std::move(a_stack);
    return model;
}

Eigen::VectorXd conditional_distribution(const MtdgModel& model, std::span<const std::int32_t> history) {
    const int m = model.m();
    const int p = model.p();
    if (static_cast<int>(history.size()) != p)
        throw DomainError("history length must equal the model order p");
    Eigen::VectorXd out = model.eta();
    const auto& a = model.a_stack().a;
    for (int g = 0; g < p; ++g) {
        const std::int32_t s = history[static_cast<std::size_t>(g)];
        if (s < 1 || s > m) throw DomainError("history state out of range 1..m");
        out += a[static_cast<std::size_t>(g)].row(s - 1);
    }
    return out;
}

ValidationReport validate_model(const MtdgModel& model, double eps_feas) {
    ValidationReport report;
    auto flag = [&report](const std::string& msg) { report.violations.push_back(msg); };

    const int m = model.m();
    const int p = model.p();
    const auto& eta = model.eta();
    const auto& lambda = model.lambda();
    const auto& q = model.q_stack();
    const auto& a = model.a_stack().a;

    for (int g = 0; g < p; ++g) {
        for (int i = 0; i < m; ++i) {
            const double rs = q[static_cast<std::size_t>(g)].row(i).sum();
            if (std::abs(rs - 1.0) > 1e-12)
                flag("row " + std::to_string(i + 1) + " of Q^" + std::to_string(g + 1) +
                     " sums to " + fmt(rs) + " (expected 1)");
        }
    }
    if (std::abs(lambda.sum() - 1.0) > 1e-12)
        flag("lambda sums to " + fmt(lambda.sum()) + " (expected 1)");
    bool eta_ok = true;
    for (int i = 0; i < m; ++i) {
        if (eta(i) <= 0.0) {
            flag("eta_" + std::to_string(i + 1) + " = " + fmt(eta(i)) + " is not strictly positive");
            eta_ok = false;
        }
    }
    if (std::abs(eta.sum() - 1.0) > 1e-12) flag("eta sums to " + fmt(eta.sum()) + " (expected 1)");
    for (int g = 0; g < p; ++g) {
        const double err = (eta.transpose() * q[static_cast<std::size_t>(g)] - eta.transpose())
                               .cwiseAbs()
                               .maxCoeff();
        if (err > 1e-10)
            flag("eta is not a left unit eigenvector of Q^" + std::to_string(g + 1) +
                 " (max error " + fmt(err) + ")");
    }
    for (int g = 0; g < p; ++g) {
        for (int i = 0; i < m; ++i) {
            const double rs = a[static_cast<std::size_t>(g)].row(i).sum();
            if (std::abs(rs) > 1e-12)
                flag("row " + std::to_string(i + 1) + " of A^" + std::to_string(g + 1) +
                     " sums to " + fmt(rs) + " (expected 0)");
        }
    }

    if (eta_ok) {
        // the 2m bound conditions: for each target state, the worst-case
        // conditional probability over all histories stays inside
        // [eps_feas, 1 - eps_feas]
        for (int i = 0; i < m; ++i) {
            double up = eta(i);
            double dn = eta(i);
            for (int g = 0; g < p; ++g) {
                up += a[static_cast<std::size_t>(g)].col(i).maxCoeff();
                dn += a[static_cast<std::size_t>(g)].col(i).minCoeff();
            }
            if (up > 1.0 - eps_feas)
                flag("upper bound violated for state " + std::to_string(i + 1) +
                     ": eta_i + sum_g max a = " + fmt(up) + " > 1 - eps_feas");
            if (dn < eps_feas)
                flag("lower bound violated for state " + std::to_string(i + 1) +
                     ": eta_i + sum_g min a = " + fmt(dn) + " < eps_feas");
        }
    }
    return report;
}

CollapsedChain collapse_full_chain(const MtdgModel& model, std::size_t state_cap) {
    const int m = model.m();
    const int p = model.p();
    double states_d = std::pow(static_cast<double>(m), p);
    if (states_d > static_cast<double>(state_cap))
        throw ResourceError("collapsed chain would need " + fmt(states_d) +
                            " states (cap " + std::to_string(state_cap) + ")");
    const std::size_t n = static_cast<std::size_t>(states_d + 0.5);

    CollapsedChain chain;
    chain.m_ = m;
    chain.p_ = p;
    chain.n_states_ = n;
    chain.cond_.resize(n * static_cast<std::size_t>(m));

    const auto& eta = model.eta();
    const auto& a = model.a_stack().a;
    std::vector<std::int32_t> tuple(static_cast<std::size_t>(p));
    for (std::size_t r = 0; r < n; ++r) {
        std::size_t rem = r;
        for (int g = p - 1; g >= 0; --g) {  // most recent state varies most slowly
            tuple[static_cast<std::size_t>(g)] = static_cast<std::int32_t>(rem % m) + 1;
            rem /= static_cast<std::size_t>(m);
        }
        Eigen::VectorXd cond = eta;
        for (int g = 0; g < p; ++g)
            cond += a[static_cast<std::size_t>(g)].row(tuple[static_cast<std::size_t>(g)] - 1);
        for (int i = 0; i < m; ++i) chain.cond_[r * static_cast<std::size_t>(m) + i] = cond(i);
    }
    return chain;
}

double CollapsedChain::entry(std::size_t row, std::size_t col) const {
    if (row >= n_states_ || col >= n_states_) throw DomainError("collapsed-chain index out of range");
    const std::size_t stride = n_states_ / static_cast<std::size_t>(m_);  // m^(p-1)
    const std::size_t next = col / stride;                                // new most recent state
    if (col % stride != row / static_cast<std::size_t>(m_)) return 0.0;   // not a one-step shift
    return cond_[row * static_cast<std::size_t>(m_) + next];
}

int CollapsedChain::digit(std::size_t index, int slot) const {
    std::size_t denom = 1;
    for (int k = 0; k < p_ - 1 - slot; ++k) denom *= static_cast<std::size_t>(m_);
    return static_cast<int>((index / denom) % static_cast<std::size_t>(m_)) + 1;
}

Eigen::VectorXd CollapsedChain::apply_left(const Eigen::VectorXd& xi) const {
    if (xi.size() != static_cast<Eigen::Index>(n_states_))
        throw DomainError("vector length must equal the collapsed state count");
    Eigen::VectorXd out = Eigen::VectorXd::Zero(xi.size());
    const std::size_t stride = n_states_ / static_cast<std::size_t>(m_);
    for (std::size_t r = 0; r < n_states_; ++r) {
        const double w = xi(static_cast<Eigen::Index>(r));
        if (w == 0.0) continue;
        const std::size_t shifted = r / static_cast<std::size_t>(m_);
        const double* cond = &cond_[r * static_cast<std::size_t>(m_)];
        for (int i = 0; i < m_; ++i)
            out(static_cast<Eigen::Index>(static_cast<std::size_t>(i) * stride + shifted)) += w * cond[i];
    }
    return out;
}

Eigen::MatrixXd CollapsedChain::dense(std::size_t cap) const {
    if (n_states_ > cap)
        throw ResourceError("dense collapsed chain capped at " + std::to_string(cap) + " states");
    Eigen::MatrixXd t(static_cast<Eigen::Index>(n_states_), static_cast<Eigen::Index>(n_states_));
    for (std::size_t r = 0; r < n_states_; ++r)
        for (std::size_t c = 0; c < n_states_; ++c)
            t(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = entry(r, c);
    return t;
}

Eigen::VectorXd CollapsedChain::marginalize(const Eigen::VectorXd& xi) const {
    const std::size_t stride = n_states_ / static_cast<std::size_t>(m_);
    Eigen::VectorXd out = Eigen::VectorXd::Zero(m_);
    for (std::size_t r = 0; r < n_states_; ++r)
        out(static_cast<Eigen::Index>(r / stride)) += xi(static_cast<Eigen::Index>(r));
    return out;
}

Eigen::VectorXd stationary_distribution(const MtdgModel& model, StationaryMethod method,
                                        const StationaryOptions& opts) {
    if (method == StationaryMethod::SharedEigenvector) return model.eta();

    CollapsedChain chain = collapse_full_chain(model, opts.state_cap);
    const auto n = static_cast<Eigen::Index>(chain.n_states());
    Eigen::VectorXd xi = Eigen::VectorXd::Constant(n, 1.0 / static_cast<double>(n));
    for (int it = 0; it < opts.max_iter; ++it) {
        Eigen::VectorXd next = chain.apply_left(xi);
        next /= next.sum();
        const double diff = (next - xi).cwiseAbs().sum();
        xi = std::move(next);
        if (diff <= opts.tol) return chain.marginalize(xi);
    }
    throw NumericError("power iteration on the collapsed chain did not converge in " +
                       std::to_string(opts.max_iter) + " iterations");
}

namespace {

int sample_state(const Eigen::VectorXd& prob, std::mt19937_64& rng) {
    const double u = uniform01(rng);
    double acc = 0.0;
    const int m = static_cast<int>(prob.size());
    for (int i = 0; i < m; ++i) {
        acc += prob(i);
        if (u < acc) return i + 1;
    }
    return m;
}

}  // namespace

EventSequence simulate(const MtdgModel& model, std::size_t n_events, std::uint64_t seed,
                       const SimulateOptions& opts) {
    if (n_events < 1) throw DomainError("n_events must be >= 1");
    const int m = model.m();
    const int p = model.p();
    const std::size_t burn_in = opts.burn_in.value_or(static_cast<std::size_t>(10) * p);

    std::mt19937_64 rng(derive_seed(seed, kStreamSimulate));
    std::vector<std::int32_t> history(static_cast<std::size_t>(p));  // most recent first
    if (!opts.init.empty()) {
        if (static_cast<int>(opts.init.size()) != p)
            throw DomainError("explicit init tuple must have length p");
        for (std::int32_t s : opts.init)
            if (s < 1 || s > m) throw DomainError("init state out of range 1..m");
        history = opts.init;
    } else {
        for (auto& h : history) h = sample_state(model.eta(), rng);
    }

    EventSequence seq;
    seq.space = model.space();
    seq.states.reserve(n_events);
    seq.day_offsets = {0};
    seq.day_labels = {"day-000001"};
    const auto& a = model.a_stack().a;
    Eigen::VectorXd cond(m);
    for (std::size_t t = 0; t < burn_in + n_events; ++t) {
        cond = model.eta();
        for (int g = 0; g < p; ++g) cond += a[static_cast<std::size_t>(g)].row(history[static_cast<std::size_t>(g)] - 1);
        const int s = sample_state(cond, rng);
        for (int g = p - 1; g > 0; --g) history[static_cast<std::size_t>(g)] = history[static_cast<std::size_t>(g - 1)];
        history[0] = static_cast<std::int32_t>(s);
        if (t >= burn_in) seq.states.push_back(static_cast<std::int32_t>(s));
    }
    return seq;
}

EventSequence simulate_days(const MtdgModel& model, std::size_t n_days, std::size_t events_per_day,
                            std::uint64_t seed, const SimulateOptions& opts) {
    if (n_days < 1) throw DomainError("n_days must be >= 1");
    EventSequence out;
    out.space = model.space();
    out.states.reserve(n_days * events_per_day);
    for (std::size_t d = 0; d < n_days; ++d) {
        EventSequence day = simulate(model, events_per_day, derive_seed(seed, kStreamSimulateDay, d), opts);
        out.day_offsets.push_back(out.states.size());
        out.states.insert(out.states.end(), day.states.begin(), day.states.end());
        char label[32];
        std::snprintf(label, sizeof(label), "day-%06zu", d + 1);
        out.day_labels.emplace_back(label);
    }
    return out;
}

namespace {

// full m x m matrix with zero row and column sums, from its top-left block
Eigen::MatrixXd complete_centered(const Eigen::MatrixXd& free_block) {
    const int m = static_cast<int>(free_block.rows()) + 1;
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(m, m);
    out.topLeftCorner(m - 1, m - 1) = free_block;
    for (int i = 0; i < m - 1; ++i) out(i, m - 1) = -free_block.row(i).sum();
    for (int j = 0; j < m - 1; ++j) out(m - 1, j) = -free_block.col(j).sum();
    out(m - 1, m - 1) = free_block.sum();
    return out;
}

}  // namespace

BivariateSet theoretical_bivariate(const MtdgModel& model, int max_lag) {
    if (max_lag < 0) throw DomainError("max_lag must be >= 0");
    const int m = model.m();
    const int p = model.p();
    const auto& eta = model.eta();
    const auto& a = model.a_stack().a;
    const Eigen::MatrixXd outer = eta * eta.transpose();

    // Centered matrices ubar^k = B(k) - eta^T eta obey
    //   ubar^k = sum_g ubar^{k-g} A^g,   ubar^0 = diag(eta) - eta^T eta,
    //   ubar^{-l} = (ubar^l)^T.
    // For k < p the right side references transposed future lags, so the
    // lags 1..p-1 are the solution of a linear system over their free
    // (m-1) x (m-1) blocks (row and column sums of ubar are zero); from
    // lag p onward the recursion is explicit.
    const Eigen::MatrixXd ubar0 = Eigen::MatrixXd(eta.asDiagonal()) - outer;
    std::vector<Eigen::MatrixXd> ubar;
    ubar.push_back(ubar0);

    if (p > 1) {
        const int nf = m - 1;
        const int per = nf * nf;
        const int n = (p - 1) * per;
        auto slot = [&](int l, int i, int j) { return (l - 1) * per + i * nf + j; };
        Eigen::MatrixXd sys = Eigen::MatrixXd::Zero(n, n);
        Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n);
        for (int k = 1; k <= p - 1; ++k) {
            const Eigen::MatrixXd rhs_k = ubar0 * a[static_cast<std::size_t>(k - 1)];
            for (int i = 0; i < nf; ++i) {
                for (int j = 0; j < nf; ++j) {
                    const int row = slot(k, i, j);
                    sys(row, row) += 1.0;
                    rhs(row) = rhs_k(i, j);
                    for (int g = 1; g <= p; ++g) {
                        if (g == k) continue;
                        const Eigen::MatrixXd& ag = a[static_cast<std::size_t>(g - 1)];
                        if (g < k) {
                            // [ubar^{k-g} A^g]_{ij} with the last column of
                            // ubar eliminated through its zero row sums
                            const int l = k - g;
                            for (int h = 0; h < nf; ++h)
                                sys(row, slot(l, i, h)) -= ag(h, j) - ag(m - 1, j);
                        } else {
                            // [(ubar^{g-k})^T A^g]_{ij}: entry (h, i) of the
                            // unknown block appears against column j of A^g
                            const int l = g - k;
                            for (int h = 0; h < nf; ++h)
                                sys(row, slot(l, h, i)) -= ag(h, j) - ag(m - 1, j);
                        }
                    }
                }
            }
        }
        Eigen::FullPivLU<Eigen::MatrixXd> lu(sys);
        if (!lu.isInvertible())
            throw NumericError("the bivariate lag system is singular for this model");
        const Eigen::VectorXd x = lu.solve(rhs);
        for (int l = 1; l <= p - 1; ++l) {
            Eigen::MatrixXd free_block(nf, nf);
            for (int i = 0; i < nf; ++i)
                for (int j = 0; j < nf; ++j) free_block(i, j) = x(slot(l, i, j));
            ubar.push_back(complete_centered(free_block));
        }
    }

    for (int k = p; k <= max_lag; ++k) {
        Eigen::MatrixXd uk = Eigen::MatrixXd::Zero(m, m);
        for (int g = 1; g <= p; ++g)
            uk += ubar[static_cast<std::size_t>(k - g)] * a[static_cast<std::size_t>(g - 1)];
        ubar.push_back(std::move(uk));
    }

    BivariateSet biv;
    biv.eta = eta;
    biv.b.reserve(static_cast<std::size_t>(max_lag) + 1);
    biv.b.push_back(Eigen::MatrixXd(eta.asDiagonal()));
    for (int k = 1; k <= max_lag; ++k)
        biv.b.push_back(ubar[static_cast<std::size_t>(k)] + outer);
    return biv;
}

MtdgModel deviation_roundtrip(const MtdgModel& model) {
    MtdgModel dev = MtdgModel::from_deviation(model.space(), model.eta(), model.a_stack(), model.lambda());
    return MtdgModel::from_mixture(dev.space(), dev.lambda(), dev.q_stack(), dev.eta());
}

}  // namespace mtdg
