#include "mtdg/diagnostics.hpp"

#include <cmath>
#include <string>

#include "mtdg/errors.hpp"
#include "mtdg/random.hpp"

namespace mtdg {

namespace {

constexpr std::uint64_t kStreamMcReplica = 0x81;

}  // namespace

std::vector<double> signature_plot(const CorrelationSet& corr, const SignatureConfig& cfg) {
    if (cfg.max_lag < 1) throw DomainError("signature plot needs max_lag >= 1");
    if (!std::isfinite(cfg.g_c1)) throw DomainError("G_C(1) must be finite");
    if (corr.max_lag < cfg.max_lag - 1)
        throw DomainError("correlation set must cover lags up to " + std::to_string(cfg.max_lag - 1));

    const double g2 = cfg.g_c1 * cfg.g_c1;
    const double pc = corr.p_c;
    std::vector<double> d;
    d.reserve(static_cast<std::size_t>(cfg.max_lag));
    for (int l = 1; l <= cfg.max_lag; ++l) {
        // sum over pairs 0 <= n < m < l of C(m - n) collapses to
        // sum_{r=1}^{l-1} (l - r) C(r)
        double pair_sum = 0.0;
        for (int r = 1; r < l; ++r)
            pair_sum += static_cast<double>(l - r) * corr.at(PriceFlag::Change, PriceFlag::Change, r);
        d.push_back(cfg.d_lf + g2 * pc + (2.0 * g2 / l) * pc * pc * pair_sum);
    }
    return d;
}

std::vector<double> diffusivity_increments(const std::vector<double>& d_series) {
    if (d_series.size() < 2) throw DomainError("diffusivity increments need at least 2 points");
    std::vector<double> inc;
    inc.reserve(d_series.size() - 1);
    for (std::size_t l = 1; l < d_series.size(); ++l)
        inc.push_back(d_series[l] * static_cast<double>(l + 1) -
                      d_series[l - 1] * static_cast<double>(l));
    return inc;
}

double fit_dlf(const std::vector<double>& d_emp, const CorrelationSet& model_corr,
               SignatureConfig cfg) {
    cfg.d_lf = 0.0;
    cfg.max_lag = std::min<int>(cfg.max_lag, static_cast<int>(d_emp.size()));
    if (cfg.max_lag < 1) throw DomainError("fit_dlf has no overlapping lags");
    const std::vector<double> model = signature_plot(model_corr, cfg);
    double acc = 0.0;
    for (std::size_t l = 0; l < model.size(); ++l) acc += d_emp[l] - model[l];
    return acc / static_cast<double>(model.size());
}

CorrelationComparison correlation_report(const CorrelationSet& empirical,
                                         const CorrelationSet& model,
                                         const std::vector<CorrelationSet>& replicas) {
    if (empirical.max_lag != model.max_lag)
        throw DomainError("correlation report needs matching lag grids");
    for (const auto& r : replicas)
        if (r.max_lag != empirical.max_lag)
            throw DomainError("replica correlation set has a mismatched lag grid");

    const PriceFlag flags[2] = {PriceFlag::Change, PriceFlag::NoChange};
    CorrelationComparison cmp;
    for (PriceFlag pi1 : flags) {
        for (PriceFlag pi2 : flags) {
            for (int l = 1; l <= empirical.max_lag; ++l) {
                CorrelationComparison::Row row;
                row.pi1 = pi1;
                row.pi2 = pi2;
                row.lag = l;
                row.empirical = empirical.at(pi1, pi2, l);
                row.model = model.at(pi1, pi2, l);
                double se = 0.0;
                if (replicas.size() >= 2) {
                    double mean = 0.0;
                    for (const auto& r : replicas) mean += r.at(pi1, pi2, l);
                    mean /= static_cast<double>(replicas.size());
                    double var = 0.0;
                    for (const auto& r : replicas) {
                        const double dd = r.at(pi1, pi2, l) - mean;
                        var += dd * dd;
                    }
                    se = std::sqrt(var / (static_cast<double>(replicas.size()) - 1.0));
                }
                row.stderr_ = se;
                const double diff = row.empirical - row.model;
                if (diff == 0.0)
                    row.z = 0.0;
                else
                    row.z = se > 0.0 ? diff / se
                                     : std::copysign(std::numeric_limits<double>::infinity(), diff);
                cmp.rows.push_back(row);
            }
        }
    }
    return cmp;
}

CorrelationComparison correlation_report(const CorrelationSet& empirical,
                                         const CorrelationSet& model, const MtdgModel& generator,
                                         int n_mc, std::uint64_t seed, std::size_t n_days,
                                         std::size_t events_per_day, bool symmetrize) {
    if (n_mc < 2) throw DomainError("correlation report needs at least 2 replicas");
    std::vector<CorrelationSet> replicas;
    replicas.reserve(static_cast<std::size_t>(n_mc));
    for (int r = 0; r < n_mc; ++r) {
        EventSequence seq = simulate_days(generator, n_days, events_per_day,
                                          derive_seed(seed, kStreamMcReplica, static_cast<std::uint64_t>(r)));
        BivariateSet biv = estimate_bivariate(seq, empirical.max_lag, symmetrize);
        replicas.push_back(signed_event_correlations(biv, generator.space()));
    }
    return correlation_report(empirical, model, replicas);
}

}  // namespace mtdg
