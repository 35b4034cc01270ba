#include "mtdg/bivariate.hpp"

#include <string>

#include "mtdg/errors.hpp"

namespace mtdg {

const Eigen::MatrixXd& BivariateSet::at(int k) const {
    if (k < 0 || k >= static_cast<int>(b.size()))
        throw DomainError("bivariate set has no lag " + std::to_string(k));
    return b[static_cast<std::size_t>(k)];
}

Eigen::MatrixXd BivariateSet::at_signed(int k) const {
    if (k >= 0) return at(k);
    return at(-k).transpose();
}

}  // namespace mtdg
