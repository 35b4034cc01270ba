#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mtdg/model.hpp"
#include "mtdg/sequence.hpp"

namespace mtdg {

/// Eleven-parameter strongly constrained parametrization of the m = 4
/// signed-event model: power-law lag weights lambda_g ~ g^-beta, a rank-one
/// base matrix built from the levels (B1, B2), and exponentially decaying
/// buy/sell-antisymmetric deviations with amplitudes (mu_i, nu_i) and rates
/// alpha_ij >= 0.
struct StrongParams {
    double beta = 1.0;
    double b1 = 0.25;
    double b2 = 0.25;
    double mu1 = 0.0;
    double mu2 = 0.0;
    double nu1 = 0.0;
    double nu2 = 0.0;
    double alpha11 = 0.0;
    double alpha12 = 0.0;
    double alpha21 = 0.0;
    double alpha22 = 0.0;

    static constexpr int kDim = 11;
    Eigen::Matrix<double, kDim, 1> to_vector() const;
    static StrongParams from_vector(const Eigen::Matrix<double, kDim, 1>& v);

    /// Empty when all box constraints hold with margin eps_feas inside the
    /// configured beta/alpha boxes; otherwise one message per violated bound.
    std::vector<std::string> violated_bounds(double eps_feas, double beta_max = 10.0,
                                             double alpha_max = 50.0) const;
};

/// Materialize the strong parametrization as an order-p model. Throws
/// DomainError naming the violated bound when theta is infeasible at margin
/// eps_feas; the returned model passes validate_model at the same margin.
MtdgModel build_strong_model(const StrongParams& theta, int p, double eps_feas = 1e-6);

/// Inverse of build_strong_model on its image. Decay rates need two lags to
/// be identified, so p >= 2 is required; zero-amplitude deviations report a
/// zero rate.
StrongParams extract_strong_params(const MtdgModel& model);

/// Conditional log-likelihood sum_t log sum_g lambda_g q^g_{x_{t-g}, x_t}.
/// The first p events of each day condition only, and likelihood windows
/// never cross day boundaries.
double log_likelihood(const StrongParams& theta, int p, const EventSequence& seq,
                      double eps_feas = 1e-6);

struct MleOptions {
    int starts = 8;
    std::uint64_t seed = 0;
    double tol = 1e-8;       // relative spread of the simplex values
    int max_iter = 5000;     // per start
    double eps_feas = 1e-6;
    double beta_max = 10.0;
    double alpha_max = 50.0;
};

struct MleFitReport {
    double log_lik = 0.0;
    int winner_start = -1;
    std::vector<double> start_log_lik;
    std::vector<int> start_iterations;
    std::vector<std::string> boundary;  // box bounds active at the solution
    bool converged = false;
    long evaluations = 0;
};

struct MleFit {
    StrongParams theta;
    MleFitReport report;
};

/// Multi-start derivative-free simplex maximization of the log-likelihood
/// with infeasible-point rejection. Deterministic given the seed; the winner
/// is the best final likelihood with ties broken by the lowest start index.
MleFit fit_mle(const EventSequence& seq, int p, const MleOptions& opts = {});

}  // namespace mtdg
