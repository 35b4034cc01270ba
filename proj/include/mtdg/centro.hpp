#pragma once

#include <Eigen/Dense>
#include <array>
#include <utility>
#include <vector>

namespace mtdg {

// Completion maps between free parameter slots and full matrices. Two
// structures appear throughout estimation:
//
//  * deviation matrices: rows sum to zero and eta * A = 0, so the top-left
//    (m-1) x (m-1) block determines the matrix (last column from row sums,
//    last row from the eta relation with c_i = eta_i / eta_m);
//  * the buy/sell-symmetric m = 4 specialization, where centrosymmetry
//    b_{ij} = b_{m-i+1,m-j+1} cuts the free slots to five per matrix.
//
// All slot coordinates are 1-based, matching the rest of the API.

/// Free slots of a centrosymmetric m=4 bivariate matrix: (1,1),(1,2),(2,1),(2,2),(3,2).
inline constexpr std::array<std::pair<int, int>, 5> kCentroBivariateSlots = {
    {{1, 1}, {1, 2}, {2, 1}, {2, 2}, {3, 2}}};

/// Free slots of a centrosymmetric m=4 deviation matrix: (1,1),(1,2),(2,1),(2,2),(2,3).
inline constexpr std::array<std::pair<int, int>, 5> kCentroDeviationSlots = {
    {{1, 1}, {1, 2}, {2, 1}, {2, 2}, {2, 3}}};

/// Rebuild a full m x m bivariate matrix from its (m-1) x (m-1) top-left
/// block so that row sums equal eta_i and column sums equal eta_j exactly.
Eigen::MatrixXd complete_bivariate(const Eigen::MatrixXd& free_block, const Eigen::VectorXd& eta);

/// Rebuild the centrosymmetric m=4 bivariate matrix from the five free
/// values (b11, b12, b21, b22, b32) and a centrosymmetric eta.
Eigen::MatrixXd complete_bivariate_centro(const Eigen::VectorXd& free5, const Eigen::VectorXd& eta);

/// Extract the five free bivariate values of a (presumed centrosymmetric)
/// m=4 matrix in slot order.
Eigen::VectorXd extract_bivariate_centro(const Eigen::MatrixXd& b);

/// Rebuild a full m x m deviation matrix from its (m-1) x (m-1) top-left
/// block so that every row sums to zero and eta * A = 0 exactly.
Eigen::MatrixXd complete_deviation(const Eigen::MatrixXd& free_block, const Eigen::VectorXd& eta);

/// Rebuild the centrosymmetric m=4 deviation matrix from the five free
/// values (a11, a12, a21, a22, a23); c2 = eta_2 / eta_1.
Eigen::MatrixXd complete_deviation_centro(const Eigen::VectorXd& free5, const Eigen::VectorXd& eta);

/// Extract the five free deviation values of a (presumed centrosymmetric)
/// m=4 matrix in slot order.
Eigen::VectorXd extract_deviation_centro(const Eigen::MatrixXd& a);

/// Reverse both indices: out_{ij} = in_{m-i+1, m-j+1}.
Eigen::MatrixXd centro_flip(const Eigen::MatrixXd& x);

/// Linear expansion of a full deviation matrix in terms of its free slots:
/// entry (h, i) of the completed matrix equals dot(weights[h-1][i-1], free).
/// `symmetric` selects the centrosymmetric m=4 map (5 slots) over the
/// general top-left-block map ((m-1)^2 slots).
std::vector<std::vector<Eigen::VectorXd>> deviation_expansion(int m, const Eigen::VectorXd& eta,
                                                              bool symmetric);

}  // namespace mtdg
