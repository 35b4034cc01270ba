#pragma once

#include <Eigen/Dense>
#include <vector>

namespace mtdg {

/// Stationary vector together with the bivariate (two-point) distributions
/// B(k), k = 0..max_lag, where B(k)_{ij} = P(X_t = i, X_{t+k} = j).
/// B(0) is diagonal and B(-k) = B(k)^T by stationarity.
struct BivariateSet {
    Eigen::VectorXd eta;
    std::vector<Eigen::MatrixXd> b;

    int max_lag() const { return static_cast<int>(b.size()) - 1; }
    int m() const { return static_cast<int>(eta.size()); }

    /// B(k) for k >= 0; throws DomainError when the lag is absent.
    const Eigen::MatrixXd& at(int k) const;

    /// B(k) for any sign of k, using B(-k) = B(k)^T.
    Eigen::MatrixXd at_signed(int k) const;
};

}  // namespace mtdg
