#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mtdg/bivariate.hpp"
#include "mtdg/sequence.hpp"
#include "mtdg/state_space.hpp"

namespace mtdg {

enum class Representation { Mixture, Deviation };

/// Stack of deviation matrices A^g = lambda_g * Qtilde^g. Each row sums to
/// zero and eta * A^g = 0, so A^g measures how lag g shifts the conditional
/// law away from the stationary vector.
struct DeviationStack {
    std::vector<Eigen::MatrixXd> a;

    int p() const { return static_cast<int>(a.size()); }
};

struct ValidationReport {
    std::vector<std::string> violations;
    bool ok() const { return violations.empty(); }
};

/// High-order mixture transition distribution chain: the conditional law of
/// X_t given the last p states is eta + sum_g A^g rows, equivalently a
/// lag-weighted mixture sum_g lambda_g Q^g rows. Both parameter stacks are
/// materialized at construction and the object is immutable afterwards.
class MtdgModel {
public:
    /// Build from mixture parameters. When `eta` is not supplied it is
    /// computed as the left unit eigenvector of the average of the Q^g.
    static MtdgModel from_mixture(StateSpace space, Eigen::VectorXd lambda,
                                  std::vector<Eigen::MatrixXd> q_stack,
                                  std::optional<Eigen::VectorXd> eta = std::nullopt);

    /// Build from the deviation form. `lambda` is only a factorization
    /// choice (the dynamics depend on A^g alone); defaults to uniform 1/p.
    static MtdgModel from_deviation(StateSpace space, Eigen::VectorXd eta, DeviationStack a_stack,
                                    std::optional<Eigen::VectorXd> lambda = std::nullopt);

    const StateSpace& space() const { return space_; }
    int m() const { return space_.m; }
    int p() const { return p_; }
    Representation representation() const { return representation_; }
    const Eigen::VectorXd& lambda() const { return lambda_; }
    const Eigen::VectorXd& eta() const { return eta_; }
    const std::vector<Eigen::MatrixXd>& q_stack() const { return q_stack_; }
    const DeviationStack& a_stack() const { return a_stack_; }

private:
    MtdgModel() = default;

    StateSpace space_;
    int p_ = 0;
    Representation representation_ = Representation::Mixture;
    Eigen::VectorXd lambda_;
    Eigen::VectorXd eta_;
    std::vector<Eigen::MatrixXd> q_stack_;
    DeviationStack a_stack_;
};

/// Conditional distribution of the next state given the trailing history
/// (most recent first, 1-based states, length p).
Eigen::VectorXd conditional_distribution(const MtdgModel& model, std::span<const std::int32_t> history);

/// Report-only check of every model invariant: row normalization of the
/// Q^g, sum of lambda, eta positivity/normalization, the shared-eigenvector
/// relation eta Q^g = eta, and the 2m bound conditions with margin eps_feas.
ValidationReport validate_model(const MtdgModel& model, double eps_feas = 1e-6);

/// Exact first-order chain over m^p history tuples. Tuples are ordered with
/// the most recent state varying most slowly; an entry is nonzero only when
/// the destination tuple is a one-step shift of the source tuple.
class CollapsedChain {
public:
    std::size_t n_states() const { return n_states_; }
    int m() const { return m_; }
    int p() const { return p_; }

    double entry(std::size_t row, std::size_t col) const;

    /// One tuple component, slot 0 = most recent; returns a 1-based state.
    int digit(std::size_t index, int slot) const;

    /// xi -> xi T (left multiplication by the transition matrix).
    Eigen::VectorXd apply_left(const Eigen::VectorXd& xi) const;

    /// Dense materialization, guarded by `cap` on the state count.
    Eigen::MatrixXd dense(std::size_t cap = 4096) const;

    /// Marginal of the most recent slot.
    Eigen::VectorXd marginalize(const Eigen::VectorXd& xi) const;

private:
    friend CollapsedChain collapse_full_chain(const MtdgModel&, std::size_t);
    CollapsedChain() = default;

    int m_ = 0;
    int p_ = 0;
    std::size_t n_states_ = 0;
    // conditional law per source tuple, row-major n_states x m
    std::vector<double> cond_;
};

/// Build the collapsed chain; throws ResourceError when m^p exceeds the cap.
CollapsedChain collapse_full_chain(const MtdgModel& model, std::size_t state_cap = 1000000);

enum class StationaryMethod { SharedEigenvector, Collapsed };

struct StationaryOptions {
    std::size_t state_cap = 1000000;
    double tol = 1e-12;
    int max_iter = 100000;
};

Eigen::VectorXd stationary_distribution(const MtdgModel& model,
                                        StationaryMethod method = StationaryMethod::SharedEigenvector,
                                        const StationaryOptions& opts = {});

struct SimulateOptions {
    /// Draws discarded before recording; defaults to 10 * p.
    std::optional<std::size_t> burn_in;
    /// Explicit initial history (most recent first, length p). Empty means
    /// the first p states are drawn iid from eta.
    std::vector<std::int32_t> init;
};

/// Monte Carlo realization as a single trading day. Deterministic given the
/// seed; draws use the top 53 bits of mt19937_64 so output is identical
/// across standard libraries.
EventSequence simulate(const MtdgModel& model, std::size_t n_events, std::uint64_t seed,
                       const SimulateOptions& opts = {});

/// Multi-day realization: each day is an independent run with a sub-seed
/// derived from (seed, day index).
EventSequence simulate_days(const MtdgModel& model, std::size_t n_days, std::size_t events_per_day,
                            std::uint64_t seed, const SimulateOptions& opts = {});

/// Exact bivariate distributions from the lag recursion
/// B(k) = eta^T eta + sum_g B(k-g) A^g, with B(0) = diag(eta) and
/// B(-k) = B(k)^T.
BivariateSet theoretical_bivariate(const MtdgModel& model, int max_lag);

/// Convert to the deviation form and recompose the mixture; the spec-level
/// identity is that the recomposed Q^g match the originals to 1e-12.
MtdgModel deviation_roundtrip(const MtdgModel& model);

}  // namespace mtdg
