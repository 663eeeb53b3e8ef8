#pragma once

// Diagnostic artifacts: Q-Q plot data for the transformed ratios, per-study
// F-test rows for forest plots, and the incremental-inclusion p-value curve
// (studies added by ascending |Z_k|, weights recomputed per prefix).

#include <algorithm>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "varmeta/estimators.hpp"
#include "varmeta/meta_tests.hpp"

namespace varmeta {

struct QQPoint {
    double theoretical;
    double observed;
};

struct QQData {
    std::vector<QQPoint> points;
    TransformKind transform = TransformKind::t3;
};

// Ordered Z_[k] at rho = 1 against plotting positions Phi^-1((k-0.5)/K).
inline QQData qq_data(std::span<const StudyF> studies, TransformKind kind) {
    if (studies.empty())
        throw std::invalid_argument("qq_data: requires at least one study");
    std::vector<double> z(studies.size());
    for (std::size_t k = 0; k < studies.size(); ++k)
        z[k] = transform(kind, studies[k].s, 1.0, studies[k].dist());
    std::sort(z.begin(), z.end());
    QQData out;
    out.transform = kind;
    const double K = static_cast<double>(studies.size());
    out.points.reserve(z.size());
    for (std::size_t k = 0; k < z.size(); ++k)
        out.points.push_back({normal_quantile((k + 0.5) / K), z[k]});
    return out;
}

struct ForestRow {
    std::string study_id;
    double ratio = 1.0;
    double ci_low = 0.0;
    double ci_high = 0.0;
    double p_value = 1.0;
};

// Standard two-sided F test of one study: p = 2 min(F(s), 1-F(s)) and the
// inverted interval (s / q_{1-a/2}, s / q_{a/2}).
inline ForestRow study_f_test(const StudyF& study, double alpha,
                              std::string study_id = {}) {
    detail::check_alpha(alpha);
    const auto d = study.dist();
    const double cdf = f_cdf(study.s, d);
    ForestRow row;
    row.study_id = std::move(study_id);
    row.ratio = study.s;
    row.p_value = std::min(1.0, 2.0 * std::min(cdf, 1.0 - cdf));
    row.ci_low = study.s / f_quantile(1.0 - 0.5 * alpha, d);
    row.ci_high = study.s / f_quantile(0.5 * alpha, d);
    return row;
}

enum class WeightRule { inverse_sqrt_c1, equal };

inline const char* name(WeightRule r) {
    return r == WeightRule::inverse_sqrt_c1 ? "inverse-sqrt-c1" : "equal";
}

// Omnibus statistic driving the incremental curve.  The weighted Z test is
// the default: the curve's characteristic dip-and-recovery (sign
// cancellation from negative scores) only exists for the signed statistic.
enum class OmnibusStatistic { zw, x2w };

struct IncrementalStep {
    int k_star = 0;
    std::vector<std::size_t> included;  // 0-based indices into the input
    double p_value = 1.0;
};

struct IncrementalCurve {
    OmnibusStatistic statistic = OmnibusStatistic::zw;
    TransformKind transform = TransformKind::t3;
    std::vector<IncrementalStep> steps;
};

inline Weights weights_for(std::span<const StudyF> studies, WeightRule rule) {
    if (rule == WeightRule::equal) return Weights::equal(studies.size());
    return default_weights(studies);
}

// p(k*) for prefixes of the studies ordered by ascending |Z_k| (ties by
// study index); weights are recomputed from the included studies only.
inline IncrementalCurve incremental_pvalues(std::span<const StudyF> studies,
                                            TransformKind kind,
                                            WeightRule rule = WeightRule::inverse_sqrt_c1,
                                            OmnibusStatistic stat = OmnibusStatistic::zw,
                                            std::uint64_t m = 100000,
                                            Seed seed = {}) {
    if (studies.empty())
        throw std::invalid_argument("incremental_pvalues: requires at least one study");
    const std::size_t K = studies.size();
    std::vector<double> z(K);
    for (std::size_t k = 0; k < K; ++k)
        z[k] = transform(kind, studies[k].s, 1.0, studies[k].dist());

    std::vector<std::size_t> order(K);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return std::fabs(z[a]) < std::fabs(z[b]);
    });

    IncrementalCurve curve;
    curve.statistic = stat;
    curve.transform = kind;
    for (std::size_t k_star = 1; k_star <= K; ++k_star) {
        std::vector<std::size_t> included(order.begin(), order.begin() + k_star);
        ZVector zs;
        std::vector<StudyF> sub;
        for (std::size_t idx : included) {
            zs.z.push_back(z[idx]);
            zs.kinds.push_back(kind);
            zs.dofs.push_back(studies[idx].dist());
            sub.push_back(studies[idx]);
        }
        const Weights w = weights_for(sub, rule);
        const MetaTestResult res = stat == OmnibusStatistic::zw
                                       ? z_weighted_test(zs, w)
                                       : x2_weighted_test(zs, w, m, seed);
        curve.steps.push_back({static_cast<int>(k_star), std::move(included), res.p_value});
    }
    return curve;
}

}  // namespace varmeta
