#include "mtdg/moments.hpp"

#include <string>

#include "mtdg/centro.hpp"
#include "mtdg/errors.hpp"

namespace mtdg {

double CorrelationSet::at(PriceFlag pi1, PriceFlag pi2, int lag) const {
    if (lag < 1 || lag > max_lag)
        throw DomainError("correlation set has no lag " + std::to_string(lag));
    return values[static_cast<std::size_t>(pair_index(pi1, pi2))][static_cast<std::size_t>(lag - 1)];
}

Eigen::VectorXd estimate_stationary(const EventSequence& seq, bool symmetrize,
                                    std::vector<std::string>* warnings) {
    seq.check();
    const int m = seq.space.m;
    Eigen::VectorXd counts = Eigen::VectorXd::Zero(m);
    for (std::int32_t s : seq.states) counts(s - 1) += 1.0;
    Eigen::VectorXd eta = counts / static_cast<double>(seq.states.size());
    if (warnings) {
        for (int i = 0; i < m; ++i)
            if (counts(i) == 0.0)
                warnings->push_back("state " + std::to_string(i + 1) + " never observed");
    }
    if (symmetrize) {
        Eigen::VectorXd sym(m);
        for (int i = 0; i < m; ++i) sym(i) = 0.5 * (eta(i) + eta(m - 1 - i));
        eta = sym;
    }
    eta /= eta.sum();
    return eta;
}

BivariateSet estimate_bivariate(const EventSequence& seq, int max_lag, bool symmetrize) {
    seq.check();
    const int m = seq.space.m;
    if (max_lag < 0) throw DomainError("max_lag must be >= 0");
    if (symmetrize && m != 4) throw DomainError("symmetrized bivariate estimation requires m = 4");

    BivariateSet biv;
    biv.eta = estimate_stationary(seq, symmetrize);
    biv.b.push_back(Eigen::MatrixXd(biv.eta.asDiagonal()));

    for (int k = 1; k <= max_lag; ++k) {
        Eigen::MatrixXd counts = Eigen::MatrixXd::Zero(m, m);
        double total = 0.0;
        for (std::size_t d = 0; d < seq.n_days(); ++d) {
            auto [first, last] = seq.day_span(d);
            if (last - first <= static_cast<std::size_t>(k)) continue;
            for (std::size_t t = first; t + static_cast<std::size_t>(k) < last; ++t) {
                counts(seq.states[t] - 1, seq.states[t + static_cast<std::size_t>(k)] - 1) += 1.0;
                total += 1.0;
            }
        }
        if (total == 0.0) throw DomainError("no usable same-day pairs at lag " + std::to_string(k));
        Eigen::MatrixXd bk = counts / total;
        if (symmetrize) {
            bk = 0.5 * (bk + centro_flip(bk));
            bk /= bk.sum();
            bk = complete_bivariate_centro(extract_bivariate_centro(bk), biv.eta);
        }
        biv.b.push_back(std::move(bk));
    }
    return biv;
}

CorrelationSet signed_event_correlations(const BivariateSet& biv, const StateSpace& space) {
    if (!space.has_event_map)
        throw DomainError("signed-event correlations need the m = 4 event mapping");
    if (biv.m() != 4) throw DomainError("bivariate set does not have m = 4");

    const Eigen::VectorXd& eta = biv.eta;
    double p_flag[2] = {0.0, 0.0};  // [C, NC]
    int sign[4];
    int flag[4];  // 0 = C, 1 = NC
    for (int s = 0; s < 4; ++s) {
        SignedEvent ev = space.event(s + 1);
        sign[s] = ev.sign;
        flag[s] = ev.flag == PriceFlag::NoChange ? 1 : 0;
        p_flag[flag[s]] += eta(s);
    }

    CorrelationSet corr;
    corr.max_lag = biv.max_lag();
    corr.p_c = p_flag[0];
    corr.p_nc = p_flag[1];
    corr.values.assign(4, std::vector<double>(static_cast<std::size_t>(corr.max_lag), 0.0));

    const Eigen::MatrixXd outer = eta * eta.transpose();
    for (int l = 1; l <= corr.max_lag; ++l) {
        const Eigen::MatrixXd centered = biv.at(l) - outer;
        for (int f1 = 0; f1 < 2; ++f1) {
            for (int f2 = 0; f2 < 2; ++f2) {
                double num = 0.0;
                for (int i = 0; i < 4; ++i) {
                    if (flag[i] != f1) continue;
                    for (int j = 0; j < 4; ++j) {
                        if (flag[j] != f2) continue;
                        num += sign[i] * sign[j] * centered(i, j);
                    }
                }
                corr.values[static_cast<std::size_t>(f1 * 2 + f2)][static_cast<std::size_t>(l - 1)] =
                    num / (p_flag[f1] * p_flag[f2]);
            }
        }
    }
    return corr;
}

}  // namespace mtdg
