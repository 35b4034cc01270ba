#include "mtdg/qp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "mtdg/errors.hpp"

namespace mtdg {

QpResult solve_qp_active_set(const QpProblem& qp, const Eigen::VectorXd& x0, const QpOptions& opts) {
    const Eigen::Index n = qp.h.rows();
    const Eigen::Index n_con = qp.a.rows();
    if (qp.h.cols() != n || qp.c.size() != n) throw OptimizationError("qp: inconsistent H/c shapes");
    if (n_con > 0 && (qp.a.cols() != n || qp.b.size() != n_con))
        throw OptimizationError("qp: inconsistent constraint shapes");
    if (x0.size() != n) throw OptimizationError("qp: start point has wrong dimension");

    Eigen::LLT<Eigen::MatrixXd> llt(qp.h);
    if (llt.info() != Eigen::Success)
        throw OptimizationError("qp: Hessian is not positive definite");

    const double scale = 1.0 + qp.c.cwiseAbs().maxCoeff();
    const double tol = opts.tol * scale;
    const int max_iter = opts.max_iter > 0
                             ? opts.max_iter
                             : 50 + 10 * static_cast<int>(n + n_con);

    // feasibility of the start point
    if (n_con > 0) {
        const double worst = (qp.a * x0 - qp.b).maxCoeff();
        if (worst > 1e-9 * scale)
            throw OptimizationError("qp: start point is infeasible by " + std::to_string(worst));
    }

    Eigen::VectorXd x = x0;
    std::vector<int> working;
    std::vector<Eigen::VectorXd> hinv_cache(static_cast<std::size_t>(n_con));
    std::vector<bool> cached(static_cast<std::size_t>(n_con), false);
    auto hinv_a = [&](int i) -> const Eigen::VectorXd& {
        if (!cached[static_cast<std::size_t>(i)]) {
            hinv_cache[static_cast<std::size_t>(i)] = llt.solve(qp.a.row(i).transpose());
            cached[static_cast<std::size_t>(i)] = true;
        }
        return hinv_cache[static_cast<std::size_t>(i)];
    };

    QpResult res;
    int zero_steps = 0;
    for (int it = 0; it < max_iter; ++it) {
        res.iterations = it + 1;
        const Eigen::VectorXd grad = qp.h * x + qp.c;
        const Eigen::VectorXd p_unc = -llt.solve(grad);

        Eigen::VectorXd p;
        Eigen::VectorXd v;  // equals the KKT multipliers of the working set
        const int k = static_cast<int>(working.size());
        if (k == 0) {
            p = p_unc;
        } else {
            Eigen::MatrixXd s(k, k);
            Eigen::VectorXd rhs(k);
            for (int r = 0; r < k; ++r) {
                rhs(r) = qp.a.row(working[static_cast<std::size_t>(r)]) * p_unc;
                for (int c2 = 0; c2 < k; ++c2)
                    s(r, c2) = qp.a.row(working[static_cast<std::size_t>(r)]) *
                               hinv_a(working[static_cast<std::size_t>(c2)]);
            }
            Eigen::LDLT<Eigen::MatrixXd> sol(s);
            v = sol.solve(rhs);
            if (!v.allFinite() || (s * v - rhs).cwiseAbs().maxCoeff() > 1e-6 * scale) {
                Eigen::FullPivLU<Eigen::MatrixXd> lu(s);
                v = lu.solve(rhs);
                if (!v.allFinite()) throw OptimizationError("qp: singular working-set system");
            }
            p = p_unc;
            for (int r = 0; r < k; ++r) p -= v(r) * hinv_a(working[static_cast<std::size_t>(r)]);
        }

        if (p.cwiseAbs().maxCoeff() <= tol) {
            if (k == 0 || v.minCoeff() >= -opts.tol) {
                res.x = x;
                res.active = working;
                res.multipliers = (k == 0) ? Eigen::VectorXd() : v;
                res.converged = true;
                return res;
            }
            Eigen::Index drop;
            v.minCoeff(&drop);
            working.erase(working.begin() + drop);
            continue;
        }

        double alpha = 1.0;
        int blocking = -1;
        for (int i = 0; i < n_con; ++i) {
            if (std::find(working.begin(), working.end(), i) != working.end()) continue;
            const double d = qp.a.row(i) * p;
            if (d <= tol) continue;
            const double slack = qp.b(i) - qp.a.row(i) * x;
            const double ai = slack / d;
            if (ai < alpha) {
                alpha = ai;
                blocking = i;
            }
        }
        alpha = std::max(alpha, 0.0);
        x += alpha * p;
        if (blocking >= 0 && alpha < 1.0) {
            working.push_back(blocking);
            if (static_cast<Eigen::Index>(working.size()) > n)
                throw OptimizationError("qp: working set exceeded the variable count");
        }
        if (alpha == 0.0) {
            if (++zero_steps > 2 * static_cast<int>(n + n_con)) break;
        } else {
            zero_steps = 0;
        }
    }

    res.x = x;
    res.active = working;
    res.converged = false;
    return res;
}

}  // namespace mtdg
