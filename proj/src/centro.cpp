#include "mtdg/centro.hpp"

#include "mtdg/errors.hpp"

namespace mtdg {

namespace {

void require_m4(const Eigen::VectorXd& eta) {
    if (eta.size() != 4) throw DomainError("centrosymmetric completion requires m = 4");
}

}  // namespace

Eigen::MatrixXd complete_bivariate(const Eigen::MatrixXd& free_block, const Eigen::VectorXd& eta) {
    const int m = static_cast<int>(eta.size());
    if (free_block.rows() != m - 1 || free_block.cols() != m - 1)
        throw DomainError("bivariate free block must be (m-1) x (m-1)");
    Eigen::MatrixXd b = Eigen::MatrixXd::Zero(m, m);
    b.topLeftCorner(m - 1, m - 1) = free_block;
    for (int i = 0; i < m - 1; ++i) b(i, m - 1) = eta(i) - free_block.row(i).sum();
    for (int j = 0; j < m - 1; ++j) b(m - 1, j) = eta(j) - free_block.col(j).sum();
    b(m - 1, m - 1) = 2.0 * eta(m - 1) - 1.0 + free_block.sum();
    return b;
}

Eigen::MatrixXd complete_bivariate_centro(const Eigen::VectorXd& free5, const Eigen::VectorXd& eta) {
    require_m4(eta);
    if (free5.size() != 5) throw DomainError("centrosymmetric bivariate needs 5 free values");
    const double b11 = free5(0), b12 = free5(1), b21 = free5(2), b22 = free5(3), b32 = free5(4);
    const double e1 = eta(0), e2 = eta(1);
    Eigen::MatrixXd b(4, 4);
    b << b11, b12, e2 - b12 - b22 - b32, e1 - e2 + b22 + b32 - b11,  //
        b21, b22, b32, e2 - b21 - b22 - b32,                         //
        e2 - b21 - b22 - b32, b32, b22, b21,                         //
        e1 - e2 + b22 + b32 - b11, e2 - b12 - b22 - b32, b12, b11;
    return b;
}

Eigen::VectorXd extract_bivariate_centro(const Eigen::MatrixXd& b) {
    if (b.rows() != 4 || b.cols() != 4) throw DomainError("centrosymmetric extraction requires m = 4");
    Eigen::VectorXd v(5);
    v << b(0, 0), b(0, 1), b(1, 0), b(1, 1), b(2, 1);
    return v;
}

Eigen::MatrixXd complete_deviation(const Eigen::MatrixXd& free_block, const Eigen::VectorXd& eta) {
    const int m = static_cast<int>(eta.size());
    if (free_block.rows() != m - 1 || free_block.cols() != m - 1)
        throw DomainError("deviation free block must be (m-1) x (m-1)");
    if (eta(m - 1) <= 0.0) throw DomainError("deviation completion requires eta_m > 0");
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(m, m);
    a.topLeftCorner(m - 1, m - 1) = free_block;
    for (int i = 0; i < m - 1; ++i) a(i, m - 1) = -free_block.row(i).sum();
    double corner = 0.0;
    for (int i = 0; i < m - 1; ++i) {
        const double ci = eta(i) / eta(m - 1);
        for (int j = 0; j < m - 1; ++j) {
            a(m - 1, j) -= ci * free_block(i, j);
            corner += ci * free_block(i, j);
        }
    }
    a(m - 1, m - 1) = corner;
    return a;
}

Eigen::MatrixXd complete_deviation_centro(const Eigen::VectorXd& free5, const Eigen::VectorXd& eta) {
    require_m4(eta);
    if (free5.size() != 5) throw DomainError("centrosymmetric deviation needs 5 free values");
    if (eta(0) <= 0.0) throw DomainError("deviation completion requires eta_1 > 0");
    const double a11 = free5(0), a12 = free5(1), a21 = free5(2), a22 = free5(3), a23 = free5(4);
    const double c2 = eta(1) / eta(0);
    const double s = a22 + a23;
    Eigen::MatrixXd a(4, 4);
    a << a11, a12, -a12 - c2 * s, -a11 + c2 * s,  //
        a21, a22, a23, -a21 - a22 - a23,          //
        -a21 - a22 - a23, a23, a22, a21,          //
        -a11 + c2 * s, -a12 - c2 * s, a12, a11;
    return a;
}

Eigen::VectorXd extract_deviation_centro(const Eigen::MatrixXd& a) {
    if (a.rows() != 4 || a.cols() != 4) throw DomainError("centrosymmetric extraction requires m = 4");
    Eigen::VectorXd v(5);
    v << a(0, 0), a(0, 1), a(1, 0), a(1, 1), a(1, 2);
    return v;
}

Eigen::MatrixXd centro_flip(const Eigen::MatrixXd& x) {
    return x.reverse();
}

std::vector<std::vector<Eigen::VectorXd>> deviation_expansion(int m, const Eigen::VectorXd& eta,
                                                              bool symmetric) {
    std::vector<std::vector<Eigen::VectorXd>> w(static_cast<std::size_t>(m));
    if (symmetric) {
        require_m4(eta);
        const double c2 = eta(1) / eta(0);
        auto row = [](std::initializer_list<double> v) {
            Eigen::VectorXd r(5);
            int k = 0;
            for (double x : v) r(k++) = x;
            return r;
        };
        w[0] = {row({1, 0, 0, 0, 0}), row({0, 1, 0, 0, 0}), row({0, -1, 0, -c2, -c2}),
                row({-1, 0, 0, c2, c2})};
        w[1] = {row({0, 0, 1, 0, 0}), row({0, 0, 0, 1, 0}), row({0, 0, 0, 0, 1}),
                row({0, 0, -1, -1, -1})};
        w[2] = {row({0, 0, -1, -1, -1}), row({0, 0, 0, 0, 1}), row({0, 0, 0, 1, 0}),
                row({0, 0, 1, 0, 0})};
        w[3] = {row({-1, 0, 0, c2, c2}), row({0, -1, 0, -c2, -c2}), row({0, 1, 0, 0, 0}),
                row({1, 0, 0, 0, 0})};
        return w;
    }
    const int n = (m - 1) * (m - 1);
    auto slot = [m](int i, int j) { return i * (m - 1) + j; };  // 0-based free (i, j)
    for (int h = 0; h < m; ++h) {
        w[static_cast<std::size_t>(h)].assign(static_cast<std::size_t>(m), Eigen::VectorXd::Zero(n));
        for (int i = 0; i < m; ++i) {
            Eigen::VectorXd& r = w[static_cast<std::size_t>(h)][static_cast<std::size_t>(i)];
            if (h < m - 1 && i < m - 1) {
                r(slot(h, i)) = 1.0;
            } else if (h < m - 1) {  // last column: minus the row sum
                for (int j = 0; j < m - 1; ++j) r(slot(h, j)) = -1.0;
            } else if (i < m - 1) {  // last row: minus the eta-weighted column sum
                for (int rr = 0; rr < m - 1; ++rr) r(slot(rr, i)) = -eta(rr) / eta(m - 1);
            } else {
                for (int rr = 0; rr < m - 1; ++rr)
                    for (int j = 0; j < m - 1; ++j) r(slot(rr, j)) = eta(rr) / eta(m - 1);
            }
        }
    }
    return w;
}

}  // namespace mtdg
