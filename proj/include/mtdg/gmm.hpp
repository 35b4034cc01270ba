#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "mtdg/bivariate.hpp"
#include "mtdg/model.hpp"
#include "mtdg/sequence.hpp"

namespace mtdg {

/// Linear moment-matching system d = K q over the stacked deviation
/// parameters. Rows follow the lag equations B(k) - eta^T eta =
/// sum_g B(k-g) A^g at the independent (k,i,j) slots; columns are the free
/// deviation slots (g,i,j). Both orderings are lexicographic with g (or k)
/// slowest, then i, then j.
struct GmmSystem {
    Eigen::VectorXd d;
    Eigen::MatrixXd k;
    Eigen::VectorXd eta;
    int p = 0;
    int m = 0;
    bool symmetric = false;

    struct Slot {
        int outer = 0;  // lag g for parameters, equation lag k for rows
        int i = 0;      // 1-based
        int j = 0;      // 1-based
    };
    std::vector<Slot> param_slots;
    std::vector<Slot> eq_slots;

    int params_per_lag() const { return symmetric ? 5 : (m - 1) * (m - 1); }
    int n_params() const { return static_cast<int>(k.cols()); }
    int n_equations() const { return static_cast<int>(k.rows()); }
};

struct GmmBuildOptions {
    /// Tolerance on |row/col sums - eta| of the input bivariate matrices
    /// and, under symmetry, on their centrosymmetry defect.
    double marginal_tol = 1e-6;
};

GmmSystem build_gmm_system(const BivariateSet& biv, int p, bool symmetry,
                           const GmmBuildOptions& opts = {});

/// Deviation-form model produced by the weakly constrained fit.
struct WeakModel {
    Eigen::VectorXd eta;
    DeviationStack a_stack;
    bool symmetric = false;

    bool has_factorization = false;
    Eigen::VectorXd lambda;
    std::vector<Eigen::MatrixXd> q_tilde;
    double q21_norm = 0.0;

    /// Deviation-representation MtdgModel (lambda from the factorization
    /// when present, uniform otherwise).
    MtdgModel to_model() const;
};

struct GmmSolveOptions {
    double eps_feas = 1e-6;
    double violation_tol = 1e-11;   // constraint slack treated as satisfied
    double qp_tol = 1e-12;
    int max_cut_rounds = 200;
    /// K is declared ill-conditioned when sigma_min < sigma_max * this.
    double cond_threshold = 1e-12;
    bool compute_spectrum = true;   // skip the SVD in bootstrap inner loops
};

struct GmmSolveReport {
    double objective = 0.0;       // || d - K q ||^2 at the solution
    double residual_norm = 0.0;
    int cuts_generated = 0;
    int cut_rounds = 0;
    int qp_iterations = 0;
    int active_cuts = 0;          // cuts binding at the solution
    bool boundary = false;
    double condition_estimate = 0.0;
    int rank = 0;
    double ridge = 0.0;           // 0 when no ridge term was added
};

struct GmmSolution {
    WeakModel model;
    GmmSolveReport report;
};

/// Minimize ||d - K q||^2 subject to the 2m probability bound constraints
/// with margin eps_feas. The max/min constraints are handled through their
/// epigraph facets: the solver alternates a primal active-set QP on the
/// linear cuts generated so far with an exact separation oracle that emits
/// the most violated facet per state. Convexity makes the returned point the
/// global minimizer whenever separation finds no violation.
GmmSolution solve_weakly_constrained(const GmmSystem& sys, const GmmSolveOptions& opts = {});

/// Split the deviation stack into (lambda, Qtilde) by pinning the (2,1)
/// entry of Qtilde to a lag-independent value, then rescaling so that
/// lambda sums to one. Stores the factorization in the model and returns
/// (lambda, Qtilde stack).
std::pair<Eigen::VectorXd, std::vector<Eigen::MatrixXd>> factorize_identifiable(WeakModel& model,
                                                                                double q21_value);

struct FeasibilityResult {
    bool feasible = false;
    Eigen::VectorXd upper_slack;  // per state: 1 - eps - eta_i - sum_g max_h a
    Eigen::VectorXd lower_slack;  // per state: eta_i - eps + sum_g min_h a
};

FeasibilityResult feasibility_check(const DeviationStack& a_stack, const Eigen::VectorXd& eta,
                                    double eps_feas);

struct GmmBootstrap {
    std::vector<Eigen::MatrixXd> stderr_a;  // per lag g, m x m standard errors
    int n_resamples = 0;
    int n_failed = 0;
};

/// Moving-block bootstrap over trading days: days are resampled with
/// replacement, the whole moment pipeline is re-run per resample, and
/// entrywise standard deviations of the fitted A^g are reported.
GmmBootstrap bootstrap_gmm_errors(const EventSequence& seq, int p, bool symmetric,
                                  const GmmSolveOptions& solve_opts, int n_resamples,
                                  std::uint64_t seed);

}  // namespace mtdg
