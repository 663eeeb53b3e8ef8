#pragma once

// Variance-stabilizing / normalizing transformations of an F statistic.
// Each transform maps S ~ F(nu1, nu2) to an approximately N(0,1) score;
// transform(kind, s, rho, d) applies the chosen map to s / rho so the
// result is a Z-score under the hypothesized variance ratio rho.

#include <algorithm>
#include <optional>
#include <string>

#include "varmeta/special.hpp"

namespace varmeta {

enum class TransformKind { t1, t2, t3, t4, inverse_cdf };

inline const char* name(TransformKind k) {
    switch (k) {
        case TransformKind::t1: return "T1";
        case TransformKind::t2: return "T2";
        case TransformKind::t3: return "T3";
        case TransformKind::t4: return "T4";
        case TransformKind::inverse_cdf: return "inverse-cdf";
    }
    return "?";
}

inline std::optional<TransformKind> parse_transform(std::string_view s) {
    if (s == "T1" || s == "t1") return TransformKind::t1;
    if (s == "T2" || s == "t2") return TransformKind::t2;
    if (s == "T3" || s == "t3") return TransformKind::t3;
    if (s == "T4" || s == "t4") return TransformKind::t4;
    if (s == "inverse-cdf" || s == "icdf") return TransformKind::inverse_cdf;
    return std::nullopt;
}

// Study-specific constants.  c1 = 2(nu1+nu2-2)/[nu1(nu2-4)] and
// c2 = 2/(nu2-4) exist only for nu2 > 4; mean_s = nu2/(nu2-2) for nu2 > 2.
// delta is the F median, cached here because t4 needs it per evaluation.
struct VstConstants {
    FDist dist;
    std::optional<double> c1;
    std::optional<double> c2;
    std::optional<double> mean_s;
    double delta;
};

inline VstConstants constants(FDist d) {
    VstConstants c{d, std::nullopt, std::nullopt, std::nullopt, 0.0};
    if (d.nu2 > 4.0) {
        c.c1 = 2.0 * (d.nu1 + d.nu2 - 2.0) / (d.nu1 * (d.nu2 - 4.0));
        c.c2 = 2.0 / (d.nu2 - 4.0);
    }
    if (d.nu2 > 2.0) c.mean_s = d.nu2 / (d.nu2 - 2.0);
    c.delta = f_quantile(0.5, d);
    return c;
}

// c1 alone, without the median solve; used by weights and estimators.
inline double c1_constant(FDist d, int study_index = -1) {
    if (!(d.nu2 > 4.0))
        throw dof_error("c1 requires nu2 > 4", study_index);
    return 2.0 * (d.nu1 + d.nu2 - 2.0) / (d.nu1 * (d.nu2 - 4.0));
}

namespace detail {

inline void check_positive_ratio(double s, const char* fn) {
    if (!(s > 0.0))
        throw std::domain_error(std::string(fn) + ": requires s > 0");
}

}  // namespace detail

// T1: log VST, (1/sqrt(c1)) ln(s / E[S]) + sqrt(c1)/2.
inline double t1(double s, const VstConstants& c) {
    detail::check_positive_ratio(s, "t1");
    if (!c.c1)
        throw dof_error("t1 requires nu2 > 4");
    const double rc = std::sqrt(*c.c1);
    return std::log(s / *c.mean_s) / rc + 0.5 * rc;
}

// T2: square-root-scale VST with its re-centering term.
inline double t2(double s, const VstConstants& c) {
    detail::check_positive_ratio(s, "t2");
    if (!c.c2)
        throw dof_error("t2 requires nu2 > 4");
    const double nu1 = c.dist.nu1, nu2 = c.dist.nu2;
    const double r = nu2 / nu1;
    const double e = *c.mean_s;
    const double rc = std::sqrt(*c.c2);
    const double lognum = std::log((std::sqrt(s) + std::sqrt(s + r)) /
                                   (std::sqrt(e) + std::sqrt(e + r)));
    const double center = rc * (2.0 * nu1 + nu2 - 2.0) /
                          (4.0 * std::sqrt(nu1 * nu1 + 2.0 * nu1 * nu2 - 2.0 * nu1));
    return 2.0 / rc * lognum + center;
}

inline double t1(double s, FDist d) {
    detail::check_positive_ratio(s, "t1");
    const double rc = std::sqrt(c1_constant(d));
    return std::log(s * (d.nu2 - 2.0) / d.nu2) / rc + 0.5 * rc;
}

inline double t2(double s, FDist d) {
    VstConstants c{d, std::nullopt, std::nullopt, std::nullopt, 0.0};
    if (d.nu2 > 4.0) {
        c.c1 = c1_constant(d);
        c.c2 = 2.0 / (d.nu2 - 4.0);
        c.mean_s = d.nu2 / (d.nu2 - 2.0);
    }
    return t2(s, c);
}

// T3: Paulson's cube-root normalizing transformation; defined for all dofs.
inline double t3(double s, FDist d) {
    if (s < 0.0)
        throw std::domain_error("t3: requires s >= 0");
    const double cbrt_s = std::cbrt(s);
    const double num = (1.0 - 2.0 / (9.0 * d.nu2)) * cbrt_s - (1.0 - 2.0 / (9.0 * d.nu1));
    const double den = std::sqrt(2.0 * cbrt_s * cbrt_s / (9.0 * d.nu2) + 2.0 / (9.0 * d.nu1));
    return num / den;
}

inline double t3(double s, const VstConstants& c) { return t3(s, c.dist); }

// T4: acosh-based VST.  Values below the median are reflected through the
// upper tail, s* = F^{-1}(1 - F(s)), evaluated as 1 / F^{-1}(u; nu2, nu1)
// with u = F(s) <= 1/2 so neither tail probability is formed by
// cancellation.  The leading nu2/(nu2+1) factor is part of the transform.
// The transform family extends to noncentral F statistics; only the
// central case (lambda = 0) is implemented here.
inline double t4(double s, const VstConstants& c, double lambda = 0.0) {
    detail::check_positive_ratio(s, "t4");
    if (lambda != 0.0)
        throw std::invalid_argument("t4: noncentral case (lambda != 0) not implemented");
    const double nu1 = c.dist.nu1, nu2 = c.dist.nu2;
    const double delta = c.delta;
    double s_star, sign;
    if (s > delta) {
        s_star = s;
        sign = 1.0;
    } else {
        const double u = f_cdf(s, c.dist);
        s_star = 1.0 / f_quantile(u, FDist(nu2, nu1));
        sign = -1.0;
    }
    const double ref = std::sqrt(nu1 * delta / nu2 + 1.0);
    const double arg = std::max(1.0, (nu1 * s_star + nu2) / std::sqrt(nu1 * nu2 * delta + nu2 * nu2));
    return (nu2 / (nu2 + 1.0)) * sign * std::sqrt(0.5 * nu2) *
           (std::acosh(arg) - std::acosh(ref));
}

// Phi^{-1}(F(s)): exact normalization through the probability integral
// transform.  The CDF value is clamped away from {0,1} so extreme draws
// in Monte-Carlo loops map to finite scores instead of a domain error.
inline double inverse_cdf_transform(double s, FDist d) {
    detail::check_positive_ratio(s, "inverse_cdf_transform");
    double u = f_cdf(s, d);
    u = std::clamp(u, 1e-300, 1.0 - std::numeric_limits<double>::epsilon() / 2.0);
    return normal_quantile(u);
}

inline double inverse_cdf_transform(double s, const VstConstants& c) {
    return inverse_cdf_transform(s, c.dist);
}

inline bool supports(TransformKind k, FDist d) {
    if (k == TransformKind::t1 || k == TransformKind::t2) return d.nu2 > 4.0;
    return true;
}

// Z-score of s under hypothesized ratio rho: the chosen transform applied
// to s / rho.  rho = 1 is the null transform.
inline double transform(TransformKind k, double s, double rho, const VstConstants& c) {
    detail::check_positive_ratio(rho, "transform(rho)");
    const double scaled = s / rho;
    switch (k) {
        case TransformKind::t1: return t1(scaled, c);
        case TransformKind::t2: return t2(scaled, c);
        case TransformKind::t3: return t3(scaled, c);
        case TransformKind::t4: return t4(scaled, c);
        case TransformKind::inverse_cdf: return inverse_cdf_transform(scaled, c);
    }
    throw std::logic_error("transform: unknown kind");
}

inline double transform(TransformKind k, double s, double rho, FDist d) {
    // only t4 needs the cached median; the rest evaluate directly
    detail::check_positive_ratio(rho, "transform(rho)");
    switch (k) {
        case TransformKind::t1: return t1(s / rho, d);
        case TransformKind::t2: return t2(s / rho, d);
        case TransformKind::t3: return t3(s / rho, d);
        case TransformKind::t4: return t4(s / rho, constants(d));
        case TransformKind::inverse_cdf: return inverse_cdf_transform(s / rho, d);
    }
    throw std::logic_error("transform: unknown kind");
}

}  // namespace varmeta
