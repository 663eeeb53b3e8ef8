#pragma once

// Test-only oracles, independent of the library's evaluation paths:
// adaptive Simpson quadrature over closed-form densities (via std::lgamma)
// and bisection quantiles on the integrated CDFs.  Used to derive expected
// values for quantile/CDF checks without going through the incomplete
// beta/gamma code under test.

#include <cmath>
#include <functional>
#include <random>
#include <vector>

namespace oracle {

inline double simpson_rec(const std::function<double(double)>& f, double a, double b,
                          double fa, double fm, double fb, double whole, double eps,
                          int depth) {
    const double m = 0.5 * (a + b);
    const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
    const double flm = f(lm), frm = f(rm);
    const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    if (depth <= 0 || std::fabs(left + right - whole) < 15.0 * eps)
        return left + right + (left + right - whole) / 15.0;
    return simpson_rec(f, a, m, fa, flm, fm, left, 0.5 * eps, depth - 1) +
           simpson_rec(f, m, b, fm, frm, fb, right, 0.5 * eps, depth - 1);
}

inline double integrate(const std::function<double(double)>& f, double a, double b,
                        double eps = 1e-13) {
    const double m = 0.5 * (a + b);
    const double fa = f(a), fm = f(m), fb = f(b);
    const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    return simpson_rec(f, a, b, fa, fm, fb, whole, eps, 60);
}

inline double f_density(double x, double nu1, double nu2) {
    if (x <= 0.0) return 0.0;
    const double a = 0.5 * nu1, b = 0.5 * nu2;
    const double logbeta = std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b);
    return std::exp(a * std::log(nu1 / nu2) + (a - 1.0) * std::log(x) -
                    (a + b) * std::log1p(nu1 * x / nu2) - logbeta);
}

inline double chi2_density(double x, double df) {
    if (x <= 0.0) return 0.0;
    const double a = 0.5 * df;
    return std::exp((a - 1.0) * std::log(x) - 0.5 * x - a * std::log(2.0) - std::lgamma(a));
}

inline double t_density(double x, double df) {
    const double c = std::lgamma(0.5 * (df + 1.0)) - std::lgamma(0.5 * df) -
                     0.5 * std::log(df * 3.14159265358979323846);
    return std::exp(c - 0.5 * (df + 1.0) * std::log1p(x * x / df));
}

// CDF by quadrature from 0 (F, chi2) with a far-tail cap.
inline double f_cdf_quad(double s, double nu1, double nu2) {
    return integrate([=](double x) { return f_density(x, nu1, nu2); }, 0.0, s);
}

inline double chi2_upper_quad(double x, double df) {
    // integrate the survival side on a transformed axis u in (0,1):
    // t = x + u/(1-u), dt = du/(1-u)^2
    return integrate(
        [=](double u) {
            const double t = x + u / (1.0 - u);
            const double jac = 1.0 / ((1.0 - u) * (1.0 - u));
            return chi2_density(t, df) * jac;
        },
        0.0, 1.0 - 1e-9);
}

inline double t_cdf_quad(double x, double df) {
    if (x >= 0.0)
        return 0.5 + integrate([=](double t) { return t_density(t, df); }, 0.0, x);
    return 0.5 - integrate([=](double t) { return t_density(t, df); }, x, 0.0);
}

// Bisection quantile on a monotone CDF evaluated by quadrature.
inline double bisect_quantile(const std::function<double(double)>& cdf, double p,
                              double lo, double hi, int iters = 200) {
    for (int i = 0; i < iters; ++i) {
        const double mid = 0.5 * (lo + hi);
        if (cdf(mid) < p)
            lo = mid;
        else
            hi = mid;
        if (hi - lo < 1e-14 * std::max(1.0, std::fabs(lo))) break;
    }
    return 0.5 * (lo + hi);
}

// Two-sided Kolmogorov-Smirnov statistic against a reference CDF.
inline double ks_statistic(std::vector<double> sample,
                           const std::function<double(double)>& cdf) {
    std::sort(sample.begin(), sample.end());
    const double n = static_cast<double>(sample.size());
    double d = 0.0;
    for (std::size_t i = 0; i < sample.size(); ++i) {
        const double u = cdf(sample[i]);
        d = std::max(d, std::fabs(u - (i + 1) / n));
        d = std::max(d, std::fabs(u - i / n));
    }
    return d;
}

inline double mean(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

inline double variance(const std::vector<double>& v) {
    const double m = mean(v);
    double s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    return s / static_cast<double>(v.size() - 1);
}

inline double pearson(const std::vector<double>& a, const std::vector<double>& b) {
    const double ma = mean(a), mb = mean(b);
    double sab = 0.0, saa = 0.0, sbb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        sab += (a[i] - ma) * (b[i] - mb);
        saa += (a[i] - ma) * (a[i] - ma);
        sbb += (b[i] - mb) * (b[i] - mb);
    }
    return sab / std::sqrt(saa * sbb);
}

}  // namespace oracle
