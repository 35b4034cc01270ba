#pragma once

#include <Eigen/Dense>
#include <vector>

namespace mtdg {

/// Strictly convex quadratic program
///     min 1/2 x^T H x + c^T x   s.t.  A x <= b
/// with H symmetric positive definite.
struct QpProblem {
    Eigen::MatrixXd h;
    Eigen::VectorXd c;
    Eigen::MatrixXd a;  // one constraint per row; zero rows allowed
    Eigen::VectorXd b;
};

struct QpResult {
    Eigen::VectorXd x;
    std::vector<int> active;         // indices of constraints active at the solution
    Eigen::VectorXd multipliers;     // Lagrange multipliers for `active` (>= 0 at a KKT point)
    int iterations = 0;
    bool converged = false;
};

struct QpOptions {
    double tol = 1e-11;       // KKT / step tolerance, relative to the problem scale
    int max_iter = 0;         // 0 -> 50 + 10 * (n + #constraints)
};

/// Primal active-set method. `x0` must be feasible; the working set starts
/// empty and constraints are added at blocking steps and dropped on negative
/// multipliers. The Hessian is factored once and each working-set solve goes
/// through the Schur complement A_W H^{-1} A_W^T, which stays tiny as long
/// as few constraints bind.
QpResult solve_qp_active_set(const QpProblem& qp, const Eigen::VectorXd& x0,
                             const QpOptions& opts = {});

}  // namespace mtdg
