#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "mtdg/bivariate.hpp"
#include "mtdg/sequence.hpp"
#include "mtdg/state_space.hpp"

namespace mtdg {

/// Signed-event correlation functions C_{pi1,pi2}(l) for l = 1..max_lag,
/// indexed by the (C, NC) flag pair of the conditioning and target events.
struct CorrelationSet {
    int max_lag = 0;
    double p_c = 0.0;
    double p_nc = 0.0;
    // values[pair_index(pi1, pi2)][l - 1]
    std::vector<std::vector<double>> values;

    static int pair_index(PriceFlag pi1, PriceFlag pi2) {
        return (pi1 == PriceFlag::NoChange ? 2 : 0) + (pi2 == PriceFlag::NoChange ? 1 : 0);
    }
    double at(PriceFlag pi1, PriceFlag pi2, int lag) const;
};

/// Relative state frequencies. With `symmetrize` the estimate is averaged
/// with its buy/sell mirror, eta_i <- (eta_i + eta_{m-i+1}) / 2. States that
/// never occur are reported through `warnings` when given.
Eigen::VectorXd estimate_stationary(const EventSequence& seq, bool symmetrize = false,
                                    std::vector<std::string>* warnings = nullptr);

/// Empirical bivariate distributions at lags 0..max_lag. Pairs never span
/// two trading days and each lag uses its own pair count, so every matrix is
/// a proper distribution. With `symmetrize` (m = 4 only) each matrix is
/// centro-averaged and then rebuilt from its five free entries and the
/// symmetrized eta, which makes the marginal identities exact.
BivariateSet estimate_bivariate(const EventSequence& seq, int max_lag, bool symmetrize = false);

/// Correlation functions of signed events from a bivariate set, using the
/// centered joint probabilities b - eta^T eta. Requires the m = 4
/// signed-event mapping.
CorrelationSet signed_event_correlations(const BivariateSet& biv, const StateSpace& space);

}  // namespace mtdg
