#pragma once

// Point and interval estimation of the common variance ratio rho (fixed
// effect) and of (rho, tau^2) (random effects).  All optimization runs on
// the log scale: theta = ln rho, psi = ln tau.

#include <cmath>
#include <optional>
#include <span>
#include <vector>

#include "varmeta/meta_tests.hpp"
#include "varmeta/special.hpp"
#include "varmeta/vst.hpp"

namespace varmeta {

// One study: ratio of sample variances with the two arm sizes (nu = n-1).
struct StudyF {
    double s;
    int n1;
    int n2;

    StudyF(double ratio, int arm1, int arm2) : s(ratio), n1(arm1), n2(arm2) {
        if (!(s > 0.0))
            throw std::domain_error("StudyF: requires s > 0");
        if (n1 < 2 || n2 < 2)
            throw std::domain_error("StudyF: requires arm sizes >= 2");
    }

    FDist dist() const { return FDist(n1 - 1.0, n2 - 1.0); }
};

enum class Model { vst_pivot, normal_fe, f_density_fe, normal_re };

inline const char* name(Model m) {
    switch (m) {
        case Model::vst_pivot: return "vst-pivot";
        case Model::normal_fe: return "fe-normal";
        case Model::f_density_fe: return "fe-f";
        case Model::normal_re: return "re";
    }
    return "?";
}

// Critical value used for the random-effects interval.
enum class CriticalValue { student_t, normal };

struct RatioEstimate {
    double rho_hat = 1.0;
    double ci_low = 0.0;
    double ci_high = 0.0;
    double log_variance = 0.0;  // variance of the ln(rho) estimator
    double alpha = 0.05;
    Model model = Model::normal_fe;
    std::optional<double> tau2_hat;   // present only for normal_re
    std::optional<double> tau2_se;    // present only for normal_re
    bool tau2_boundary = false;       // tau^2 pinned at zero
};

namespace detail {

inline void check_alpha(double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0))
        throw std::domain_error("requires 0 < alpha < 1");
}

inline std::vector<double> c1_values(std::span<const StudyF> studies) {
    if (studies.empty())
        throw std::invalid_argument("requires at least one study");
    std::vector<double> c(studies.size());
    for (std::size_t k = 0; k < studies.size(); ++k)
        c[k] = c1_constant(studies[k].dist(), static_cast<int>(k));
    return c;
}

// y~_k = ln(s_k) + ln((n2-3)/(n2-1)) + c1k/2, the centered log ratio with
// mean ln(rho) under the approximate normal model.
inline std::vector<double> centered_log_ratios(std::span<const StudyF> studies,
                                               std::span<const double> c1) {
    std::vector<double> y(studies.size());
    for (std::size_t k = 0; k < studies.size(); ++k) {
        const double nu2 = studies[k].n2 - 1.0;
        y[k] = std::log(studies[k].s) + std::log((nu2 - 2.0) / nu2) + 0.5 * c1[k];
    }
    return y;
}

}  // namespace detail

// Weights w_k proportional to 1/sqrt(c1k) (the MLE-motivated choice).
inline Weights default_weights(std::span<const StudyF> studies) {
    const auto c1 = detail::c1_values(studies);
    std::vector<double> w(c1.size());
    for (std::size_t k = 0; k < c1.size(); ++k) w[k] = 1.0 / std::sqrt(c1[k]);
    return Weights::from_raw(std::move(w));
}

// Closed-form pivot estimator from the T1 transform:
//   ln(rho)_hat = (sum w_k/sqrt(c1k))^-1 sum (w_k/sqrt(c1k)) y~_k
//   V           = (sum w_k/sqrt(c1k))^-2 sum w_k^2
inline RatioEstimate vst_pivot_estimate(std::span<const StudyF> studies,
                                        const Weights& w, double alpha) {
    detail::check_alpha(alpha);
    if (w.size() != studies.size())
        throw std::invalid_argument("vst_pivot_estimate: weight/study length mismatch");
    const auto c1 = detail::c1_values(studies);
    const auto y = detail::centered_log_ratios(studies, c1);

    double denom = 0.0, num = 0.0, sum_w2 = 0.0;
    for (std::size_t k = 0; k < studies.size(); ++k) {
        const double wk = w.values()[k];
        const double a = wk / std::sqrt(c1[k]);
        denom += a;
        num += a * y[k];
        sum_w2 += wk * wk;
    }
    const double omega = num / denom;
    const double v = sum_w2 / (denom * denom);
    const double half = normal_quantile(1.0 - 0.5 * alpha) * std::sqrt(v);

    RatioEstimate est;
    est.rho_hat = std::exp(omega);
    est.ci_low = std::exp(omega - half);
    est.ci_high = std::exp(omega + half);
    est.log_variance = v;
    est.alpha = alpha;
    est.model = Model::vst_pivot;
    return est;
}

namespace detail {

// Expand a bracket on theta until fn changes sign; fn must be decreasing.
// Throws after max_doublings expansions (degenerate inputs).
template <class F>
std::pair<double, double> expand_decreasing_bracket(F&& fn, double center,
                                                    double target) {
    double step = 0.5;
    double lo = center - step, hi = center + step;
    double fhi = fn(hi);
    double flo = fn(lo);
    for (int i = 0; i < 200; ++i) {
        if (flo >= target && fhi <= target) return {lo, hi};
        step *= 2.0;
        if (flo < target) {
            lo -= step;
            flo = fn(lo);
        }
        if (fhi > target) {
            hi += step;
            fhi = fn(hi);
        }
    }
    throw std::runtime_error("root bracket expansion failed after 200 doublings");
}

// Root of a decreasing function fn(theta) = target to 1e-10 on theta.
template <class F>
double solve_decreasing(F&& fn, double target, double lo, double hi) {
    double flo = fn(lo), fhi = fn(hi);
    for (int it = 0; it < 400; ++it) {
        double mid;
        const double denom = flo - fhi;
        if (denom > 0.0 && it % 2 == 0) {
            mid = lo + (flo - target) / denom * (hi - lo);
            const double margin = 1e-3 * (hi - lo);
            if (!(mid > lo + margin && mid < hi - margin)) mid = 0.5 * (lo + hi);
        } else {
            mid = 0.5 * (lo + hi);
        }
        const double fm = fn(mid);
        if (fm > target) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
            fhi = fm;
        }
        if (hi - lo <= 1e-10) break;
    }
    return 0.5 * (lo + hi);
}

}  // namespace detail

// Root-solving estimator: rho_hat solves Z_w(rho) = 0 and the interval
// endpoints solve Z_w(rho) = +/- z_{1-alpha/2}.  Z_w is strictly
// decreasing in ln(rho) because every transform is increasing in s.
inline RatioEstimate vst_root_estimate(std::span<const StudyF> studies,
                                       const Weights& w, TransformKind kind,
                                       double alpha) {
    detail::check_alpha(alpha);
    if (w.size() != studies.size())
        throw std::invalid_argument("vst_root_estimate: weight/study length mismatch");

    std::vector<VstConstants> consts;
    consts.reserve(studies.size());
    for (std::size_t k = 0; k < studies.size(); ++k) {
        const auto d = studies[k].dist();
        if (!supports(kind, d))
            throw dof_error(std::string(name(kind)) + " requires nu2 > 4",
                            static_cast<int>(k));
        consts.push_back(constants(d));
    }

    double sum_w2 = 0.0;
    for (double wk : w.values()) sum_w2 += wk * wk;
    const double scale = std::sqrt(sum_w2);

    const auto z_of_theta = [&](double theta) {
        const double rho = std::exp(theta);
        double acc = 0.0;
        for (std::size_t k = 0; k < studies.size(); ++k)
            acc += w.values()[k] * transform(kind, studies[k].s, rho, consts[k]);
        return acc / scale;
    };

    double center = 0.0;
    for (std::size_t k = 0; k < studies.size(); ++k)
        center += std::log(studies[k].s);
    center /= static_cast<double>(studies.size());

    const double zcrit = normal_quantile(1.0 - 0.5 * alpha);
    const auto solve_at = [&](double target) {
        auto [lo, hi] = detail::expand_decreasing_bracket(z_of_theta, center, target);
        return detail::solve_decreasing(z_of_theta, target, lo, hi);
    };
    const double theta_hat = solve_at(0.0);
    const double theta_lo = solve_at(zcrit);    // Z_w = +z at the lower endpoint
    const double theta_hi = solve_at(-zcrit);

    RatioEstimate est;
    est.rho_hat = std::exp(theta_hat);
    est.ci_low = std::exp(theta_lo);
    est.ci_high = std::exp(theta_hi);
    est.log_variance = 0.25 * (theta_hi - theta_lo) * (theta_hi - theta_lo) / (zcrit * zcrit);
    est.alpha = alpha;
    est.model = Model::vst_pivot;
    return est;
}

namespace detail {

inline double f_log_pdf(double x, FDist d) {
    const double a = 0.5 * d.nu1, b = 0.5 * d.nu2;
    return a * std::log(d.nu1 / d.nu2) + (a - 1.0) * std::log(x) -
           (a + b) * std::log1p(d.nu1 * x / d.nu2) - log_beta(a, b);
}

// Golden-section maximization of fn on [lo, hi].
template <class F>
double golden_max(F&& fn, double lo, double hi, double xtol) {
    constexpr double inv_phi = 0.6180339887498949;
    double x1 = hi - inv_phi * (hi - lo);
    double x2 = lo + inv_phi * (hi - lo);
    double f1 = fn(x1), f2 = fn(x2);
    while (hi - lo > xtol) {
        if (f1 < f2) {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = fn(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = fn(x1);
        }
    }
    return 0.5 * (lo + hi);
}

// Expand around center until the middle point beats both ends.
template <class F>
std::pair<double, double> bracket_maximum(F&& fn, double center) {
    double step = 0.5;
    double lo = center - step, hi = center + step;
    double fc = fn(center), flo = fn(lo), fhi = fn(hi);
    for (int i = 0; i < 500; ++i) {
        if (fc >= flo && fc >= fhi) return {lo, hi};
        if (flo > fc) {
            hi = center;
            fhi = fc;
            center = lo;
            fc = flo;
            lo -= step;
            flo = fn(lo);
        } else {
            lo = center;
            flo = fc;
            center = hi;
            fc = fhi;
            hi += step;
            fhi = fn(hi);
        }
        step *= 1.6;
    }
    throw std::runtime_error("likelihood maximization did not converge (bracket)");
}

}  // namespace detail

// Fixed-effect MLE on the exact rescaled-F likelihood.  The scalar
// optimization runs on theta = ln rho (golden section, then a Newton
// polish); log_variance is the inverse negative second difference of the
// log-likelihood at the optimum.
inline RatioEstimate f_density_fe_mle(std::span<const StudyF> studies, double alpha) {
    detail::check_alpha(alpha);
    if (studies.empty())
        throw std::invalid_argument("f_density_fe_mle: requires at least one study");
    std::vector<FDist> dists;
    dists.reserve(studies.size());
    for (const auto& st : studies) {
        if (!(st.s > 0.0))
            throw std::domain_error("f_density_fe_mle: requires s > 0");
        dists.push_back(st.dist());
    }

    const auto loglik = [&](double theta) {
        double acc = 0.0;
        for (std::size_t k = 0; k < studies.size(); ++k)
            acc += detail::f_log_pdf(studies[k].s * std::exp(-theta), dists[k]) - theta;
        return acc;
    };

    double center = 0.0;
    for (const auto& st : studies) center += std::log(st.s);
    center /= static_cast<double>(studies.size());

    auto [lo, hi] = detail::bracket_maximum(loglik, center);
    double theta = detail::golden_max(loglik, lo, hi, 1e-11);

    // Newton polish with central differences
    for (int it = 0; it < 500; ++it) {
        const double h = 1e-5 * std::max(1.0, std::fabs(theta));
        const double fp = loglik(theta + h), fm = loglik(theta - h), f0 = loglik(theta);
        const double g = (fp - fm) / (2.0 * h);
        const double hess = (fp - 2.0 * f0 + fm) / (h * h);
        if (!(hess < 0.0)) break;
        const double step = g / hess;
        theta -= step;
        if (std::fabs(step) < 1e-12) break;
    }

    const double h2 = 1e-4 * std::max(1.0, std::fabs(theta));
    const double dd = (loglik(theta + h2) - 2.0 * loglik(theta) + loglik(theta - h2)) / (h2 * h2);
    if (!(dd < 0.0))
        throw std::runtime_error("f_density_fe_mle: non-concave at optimum");
    const double v = -1.0 / dd;
    const double half = normal_quantile(1.0 - 0.5 * alpha) * std::sqrt(v);

    RatioEstimate est;
    est.rho_hat = std::exp(theta);
    est.ci_low = std::exp(theta - half);
    est.ci_high = std::exp(theta + half);
    est.log_variance = v;
    est.alpha = alpha;
    est.model = Model::f_density_fe;
    return est;
}

// Fixed-effect MLE under the approximate normal model for ln(S_k); equals
// the pivot estimator with weights 1/sqrt(c1k).
inline RatioEstimate normal_fe_mle(std::span<const StudyF> studies, double alpha) {
    detail::check_alpha(alpha);
    const auto c1 = detail::c1_values(studies);
    const auto y = detail::centered_log_ratios(studies, c1);
    double denom = 0.0, num = 0.0;
    for (std::size_t k = 0; k < studies.size(); ++k) {
        denom += 1.0 / c1[k];
        num += y[k] / c1[k];
    }
    const double omega = num / denom;
    const double v = 1.0 / denom;
    const double half = normal_quantile(1.0 - 0.5 * alpha) * std::sqrt(v);

    RatioEstimate est;
    est.rho_hat = std::exp(omega);
    est.ci_low = std::exp(omega - half);
    est.ci_high = std::exp(omega + half);
    est.log_variance = v;
    est.alpha = alpha;
    est.model = Model::normal_fe;
    return est;
}

// Random-effects MLE: maximize the normal log-likelihood over
// (omega, psi = ln tau).  The omega step is the closed-form weighted mean;
// psi is found by a golden-section line search on the profile likelihood,
// then both parameters get a Newton polish with a finite-difference
// Hessian.  V_omega = (sum 1/(c1k+tau2))^-1; V_tau2 = 2 (sum 1/(c1k+tau2)^2)^-1.
inline RatioEstimate normal_re_mle(std::span<const StudyF> studies, double alpha,
                                   CriticalValue critical = CriticalValue::student_t) {
    detail::check_alpha(alpha);
    if (studies.size() < 2)
        throw std::invalid_argument("normal_re_mle: requires K >= 2");
    const auto c1 = detail::c1_values(studies);
    const auto y = detail::centered_log_ratios(studies, c1);
    const std::size_t K = studies.size();

    const auto profile_omega = [&](double tau2) {
        double denom = 0.0, num = 0.0;
        for (std::size_t k = 0; k < K; ++k) {
            const double v = c1[k] + tau2;
            denom += 1.0 / v;
            num += y[k] / v;
        }
        return num / denom;
    };
    const auto loglik = [&](double omega, double psi) {
        const double tau2 = std::exp(2.0 * psi);
        double acc = 0.0;
        for (std::size_t k = 0; k < K; ++k) {
            const double v = c1[k] + tau2;
            const double r = y[k] - omega;
            acc += std::log(v) + r * r / v;
        }
        return -0.5 * acc;
    };
    const auto profile_loglik = [&](double psi) {
        return loglik(profile_omega(std::exp(2.0 * psi)), psi);
    };

    // DerSimonian-Laird style moment start for tau^2
    double denom_fe = 0.0, num_fe = 0.0, sum_inv = 0.0, sum_inv2 = 0.0;
    for (std::size_t k = 0; k < K; ++k) {
        denom_fe += 1.0 / c1[k];
        num_fe += y[k] / c1[k];
        sum_inv += 1.0 / c1[k];
        sum_inv2 += 1.0 / (c1[k] * c1[k]);
    }
    const double omega_fe = num_fe / denom_fe;
    double q = 0.0;
    for (std::size_t k = 0; k < K; ++k)
        q += (y[k] - omega_fe) * (y[k] - omega_fe) / c1[k];
    const double dl_denom = sum_inv - sum_inv2 / sum_inv;
    const double tau2_mm = dl_denom > 0.0
                               ? std::max(0.0, (q - (K - 1.0)) / dl_denom)
                               : 0.0;
    const double psi0 = 0.5 * std::log(std::max(1e-8, tau2_mm));

    constexpr double psi_floor = -13.0;  // tau^2 ~ 5e-12, treated as boundary
    double lo = std::max(psi_floor, psi0 - 2.0), hi = psi0 + 2.0;
    while (hi < 4.0 && profile_loglik(hi) > profile_loglik(hi - 0.5)) hi += 1.0;
    while (lo > psi_floor && profile_loglik(lo) > profile_loglik(lo + 0.5)) lo -= 1.0;
    double psi = detail::golden_max(profile_loglik, lo, hi, 1e-12);
    double omega = profile_omega(std::exp(2.0 * psi));

    // Newton polish on the pair; steps are clamped to the psi box and a
    // candidate is accepted only when it is finite and not worse.  Stops on
    // likelihood and parameter stalls.
    constexpr double psi_ceil = 5.0;
    double ll = loglik(omega, psi);
    for (int it = 0; it < 200; ++it) {
        const double ho = 1e-6 * std::max(1.0, std::fabs(omega));
        const double hp = 1e-6 * std::max(1.0, std::fabs(psi));
        const double go = (loglik(omega + ho, psi) - loglik(omega - ho, psi)) / (2.0 * ho);
        const double gp = (loglik(omega, psi + hp) - loglik(omega, psi - hp)) / (2.0 * hp);
        const double hoo = (loglik(omega + ho, psi) - 2.0 * ll + loglik(omega - ho, psi)) / (ho * ho);
        const double hpp = (loglik(omega, psi + hp) - 2.0 * ll + loglik(omega, psi - hp)) / (hp * hp);
        const double hop = (loglik(omega + ho, psi + hp) - loglik(omega + ho, psi - hp) -
                            loglik(omega - ho, psi + hp) + loglik(omega - ho, psi - hp)) /
                           (4.0 * ho * hp);
        const double det = hoo * hpp - hop * hop;
        if (!std::isfinite(det) || !(std::fabs(det) > 1e-300)) break;
        const double step_o = (hpp * go - hop * gp) / det;
        const double step_p = (hoo * gp - hop * go) / det;
        if (!std::isfinite(step_o) || !std::isfinite(step_p)) break;
        double new_psi = std::clamp(psi - step_p, psi_floor, psi_ceil);
        double new_omega = omega - step_o;
        double new_ll = loglik(new_omega, new_psi);
        if (!std::isfinite(new_ll) || new_ll + 1e-12 < ll) {
            // fall back to the profiled point rather than a worse one
            new_omega = profile_omega(std::exp(2.0 * new_psi));
            new_ll = loglik(new_omega, new_psi);
            if (!std::isfinite(new_ll) || new_ll + 1e-12 < ll) break;
        }
        const bool stalled = std::fabs(new_ll - ll) < 1e-12 &&
                             std::fabs(new_omega - omega) < 1e-10 &&
                             std::fabs(new_psi - psi) < 1e-10;
        omega = new_omega;
        psi = new_psi;
        ll = new_ll;
        if (stalled) break;
    }

    if (!std::isfinite(omega) || !std::isfinite(psi))
        throw std::runtime_error("normal_re_mle: optimizer did not converge");

    double tau2 = std::exp(2.0 * psi);
    bool boundary = false;
    if (tau2 < 1e-10) {
        tau2 = 0.0;
        boundary = true;
        omega = profile_omega(0.0);
    }

    double sum_v = 0.0, sum_v2 = 0.0;
    for (std::size_t k = 0; k < K; ++k) {
        const double v = c1[k] + tau2;
        sum_v += 1.0 / v;
        sum_v2 += 1.0 / (v * v);
    }
    const double v_omega = 1.0 / sum_v;
    const double v_tau2 = 2.0 / sum_v2;
    const double crit = critical == CriticalValue::student_t
                            ? t_quantile(1.0 - 0.5 * alpha, static_cast<int>(K) - 1)
                            : normal_quantile(1.0 - 0.5 * alpha);
    const double half = crit * std::sqrt(v_omega);

    RatioEstimate est;
    est.rho_hat = std::exp(omega);
    est.ci_low = std::exp(omega - half);
    est.ci_high = std::exp(omega + half);
    est.log_variance = v_omega;
    est.alpha = alpha;
    est.model = Model::normal_re;
    est.tau2_hat = tau2;
    est.tau2_se = std::sqrt(v_tau2);
    est.tau2_boundary = boundary;
    return est;
}

}  // namespace varmeta
