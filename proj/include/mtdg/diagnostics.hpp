#pragma once

#include <cstdint>
#include <vector>

#include "mtdg/model.hpp"
#include "mtdg/moments.hpp"

namespace mtdg {

/// Inputs of the large-tick signature plot: the impact scale G_C(1) in
/// price units per event and the low-frequency variance offset D_LF.
struct SignatureConfig {
    double g_c1 = 1.0;
    double d_lf = 0.0;
    int max_lag = 1;
};

/// Lag-dependent diffusion coefficient
///   D(l) = D_LF + G^2 P(C) + (2 G^2 / l) sum_{0<=n<m<l} P(C)^2 C_CC(m-n),
/// returned for l = 1..max_lag. Requires C_CC up to max_lag - 1.
std::vector<double> signature_plot(const CorrelationSet& corr, const SignatureConfig& cfg);

/// D(l+1)(l+1) - D(l) l for l = 1..len-1. Constant in l exactly when the
/// price process is diffusive beyond that lag.
std::vector<double> diffusivity_increments(const std::vector<double>& d_series);

/// Least-squares offset between an empirical signature series and the model
/// series implied by `corr` with D_LF = 0. The offset enters additively, so
/// the optimum is the mean residual in closed form.
double fit_dlf(const std::vector<double>& d_emp, const CorrelationSet& model_corr,
               SignatureConfig cfg);

struct CorrelationComparison {
    struct Row {
        PriceFlag pi1;
        PriceFlag pi2;
        int lag;
        double empirical;
        double model;
        double stderr_;
        double z;
    };
    std::vector<Row> rows;
};

/// Cell-by-cell comparison of an empirical correlation set against a model
/// one, with standard errors taken across the supplied replica sets.
CorrelationComparison correlation_report(const CorrelationSet& empirical,
                                         const CorrelationSet& model,
                                         const std::vector<CorrelationSet>& replicas);

/// Convenience overload: replicas are simulated from `generator` with the
/// given day shape, each estimated like the empirical input.
CorrelationComparison correlation_report(const CorrelationSet& empirical,
                                         const CorrelationSet& model, const MtdgModel& generator,
                                         int n_mc, std::uint64_t seed, std::size_t n_days,
                                         std::size_t events_per_day, bool symmetrize = false);

}  // namespace mtdg
