#pragma once

// Self-contained probability kernel: log-gamma, regularized incomplete
// beta/gamma, CDFs and quantiles for the normal, chi-square, F and
// Student-t distributions, plus a small seeded generator used by the
// simulation harness.  Quantiles are obtained by bracketed root solving
// on the corresponding CDF (tolerance 1e-12 on the probability scale).

#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>

namespace varmeta {

inline constexpr double pi = 3.14159265358979323846;

// F distribution parameters; per-study degrees of freedom are nu = n - 1.
struct FDist {
    double nu1;
    double nu2;

    FDist(double numerator_dof, double denominator_dof)
        : nu1(numerator_dof), nu2(denominator_dof) {
        if (!(nu1 > 0.0) || !(nu2 > 0.0))
            throw std::domain_error("FDist: degrees of freedom must be positive");
    }
};

// 64-bit seed; identical seeds reproduce identical sample streams.
struct Seed {
    std::uint64_t value = 0;
};

// Structured "degrees of freedom too small" error.  study_index is
// 0-based and -1 when the error is not tied to a particular study.
class dof_error : public std::domain_error {
  public:
    explicit dof_error(const std::string& msg, int study_index = -1)
        : std::domain_error(msg), study_index_(study_index) {}
    int study_index() const noexcept { return study_index_; }

  private:
    int study_index_;
};

// ---------------------------------------------------------------------------
// gamma / beta kernels
// ---------------------------------------------------------------------------

// ln Gamma(x) for x > 0, Lanczos approximation (g = 7, 9 terms).
inline double log_gamma(double x) {
    if (!(x > 0.0))
        throw std::domain_error("log_gamma: requires x > 0");
    static constexpr double g = 7.0;
    static constexpr double coeff[9] = {
        0.99999999999980993,
        676.5203681218851,
        -1259.1392167224028,
        771.32342877765313,
        -176.61502916214059,
        12.507343278686905,
        -0.13857109526572012,
        9.9843695780195716e-6,
        1.5056327351493116e-7,
    };
    if (x < 0.5) {
        // reflection, keeps the approximation on x >= 0.5
        return std::log(pi / std::sin(pi * x)) - log_gamma(1.0 - x);
    }
    const double z = x - 1.0;
    double a = coeff[0];
    for (int i = 1; i < 9; ++i) a += coeff[i] / (z + i);
    const double t = z + g + 0.5;
    return 0.5 * std::log(2.0 * pi) + (z + 0.5) * std::log(t) - t + std::log(a);
}

inline double log_beta(double a, double b) {
    return log_gamma(a) + log_gamma(b) - log_gamma(a + b);
}

namespace detail {

// Continued fraction for the incomplete beta (modified Lentz).
inline double beta_cf(double a, double b, double x) {
    constexpr double eps = 1e-16;
    constexpr double fpmin = 1e-300;
    constexpr int max_iter = 500;

    const double qab = a + b;
    const double qap = a + 1.0;
    const double qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::fabs(d) < fpmin) d = fpmin;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= max_iter; ++m) {
        const int m2 = 2 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < fpmin) d = fpmin;
        c = 1.0 + aa / c;
        if (std::fabs(c) < fpmin) c = fpmin;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((qap + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < fpmin) d = fpmin;
        c = 1.0 + aa / c;
        if (std::fabs(c) < fpmin) c = fpmin;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::fabs(del - 1.0) <= eps) return h;
    }
    return h;  // converged to working precision for all practical (a, b)
}

}  // namespace detail

// Regularized incomplete beta I_x(a,b); continued fraction with the
// symmetry switch at x = (a+1)/(a+b+2) for uniform tail accuracy.
inline double reg_inc_beta(double a, double b, double x) {
    if (!(a > 0.0) || !(b > 0.0))
        throw std::domain_error("reg_inc_beta: requires a, b > 0");
    if (!(x >= 0.0 && x <= 1.0))
        throw std::domain_error("reg_inc_beta: requires 0 <= x <= 1");
    if (x == 0.0) return 0.0;
    if (x == 1.0) return 1.0;
    const double lbt = a * std::log(x) + b * std::log1p(-x) - log_beta(a, b);
    const double bt = std::exp(lbt);
    if (x < (a + 1.0) / (a + b + 2.0))
        return bt * detail::beta_cf(a, b, x) / a;
    return 1.0 - bt * detail::beta_cf(b, a, 1.0 - x) / b;
}

namespace detail {

// Regularized lower incomplete gamma P(a,x): series for x < a+1,
// Lentz continued fraction for the upper tail otherwise.
inline double reg_lower_gamma(double a, double x) {
    if (x <= 0.0) return 0.0;
    const double lg = log_gamma(a);
    if (x < a + 1.0) {
        double ap = a;
        double sum = 1.0 / a;
        double del = sum;
        for (int n = 0; n < 1000; ++n) {
            ap += 1.0;
            del *= x / ap;
            sum += del;
            if (std::fabs(del) < std::fabs(sum) * 1e-16) break;
        }
        return sum * std::exp(-x + a * std::log(x) - lg);
    }
    constexpr double fpmin = 1e-300;
    double b = x + 1.0 - a;
    double c = 1.0 / fpmin;
    double d = 1.0 / b;
    double h = d;
    for (int i = 1; i <= 1000; ++i) {
        const double an = -i * (i - a);
        b += 2.0;
        d = an * d + b;
        if (std::fabs(d) < fpmin) d = fpmin;
        c = b + an / c;
        if (std::fabs(c) < fpmin) c = fpmin;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::fabs(del - 1.0) <= 1e-16) break;
    }
    const double q = std::exp(-x + a * std::log(x) - lg) * h;
    return 1.0 - q;
}

// Solve f(x) = target for a monotone increasing f on a sign-changing
// bracket.  Secant steps alternate with forced bisection so the bracket
// halves at least every other iteration; terminates on bracket width.
template <class F>
double solve_monotone(F&& f, double target, double lo, double hi,
                      double flo, double fhi, double xtol, int max_iter) {
    if (flo > target || fhi < target)
        throw std::domain_error("solve_monotone: target outside bracket");
    for (int it = 0; it < max_iter && hi - lo > xtol; ++it) {
        double mid;
        const double denom = fhi - flo;
        if (denom > 0.0 && it % 2 == 0) {
            mid = lo + (target - flo) / denom * (hi - lo);
            const double margin = 1e-3 * (hi - lo);
            if (!(mid > lo + margin && mid < hi - margin))
                mid = 0.5 * (lo + hi);
        } else {
            mid = 0.5 * (lo + hi);
        }
        const double fx = f(mid);
        if (fx == target) return mid;
        if (fx < target) {
            lo = mid;
            flo = fx;
        } else {
            hi = mid;
            fhi = fx;
        }
    }
    return 0.5 * (lo + hi);
}

}  // namespace detail

// ---------------------------------------------------------------------------
// normal
// ---------------------------------------------------------------------------

inline double normal_cdf(double z) {
    return 0.5 * std::erfc(-z / std::sqrt(2.0));
}

inline double normal_pdf(double z) {
    return std::exp(-0.5 * z * z) / std::sqrt(2.0 * pi);
}

// Inverse standard normal CDF.  Rational approximation (Acklam) with one
// Halley refinement against erfc, good to full double precision.
inline double normal_quantile(double p) {
    if (!(p > 0.0 && p < 1.0))
        throw std::domain_error("normal_quantile: requires 0 < p < 1");
    static constexpr double a[6] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                    -2.759285104469687e+02, 1.383577518672690e+02,
                                    -3.066479806614716e+01, 2.506628277459239e+00};
    static constexpr double b[5] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                    -1.556989798598866e+02, 6.680131188771972e+01,
                                    -1.328068155288572e+01};
    static constexpr double c[6] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                    -2.400758277161838e+00, -2.549732539343734e+00,
                                    4.374664141464968e+00,  2.938163982698783e+00};
    static constexpr double d[4] = {7.784695709041462e-03, 3.224671290700398e-01,
                                    2.445134137142996e+00, 3.754408661907416e+00};
    constexpr double plow = 0.02425;
    double x;
    if (p < plow) {
        const double q = std::sqrt(-2.0 * std::log(p));
        x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    } else if (p <= 1.0 - plow) {
        const double q = p - 0.5;
        const double r = q * q;
        x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
            (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
    } else {
        const double q = std::sqrt(-2.0 * std::log1p(-p));
        x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }
    // Halley step: e = cdf(x) - p
    const double density = normal_pdf(x);
    if (density > 0.0) {
        const double u = (normal_cdf(x) - p) / density;
        x -= u / (1.0 + 0.5 * x * u);
    }
    return x;
}

// ---------------------------------------------------------------------------
// chi-square, F, Student-t
// ---------------------------------------------------------------------------

inline double chi2_cdf(double x, double df) {
    if (!(df > 0.0))
        throw std::domain_error("chi2_cdf: requires df > 0");
    if (x < 0.0)
        throw std::domain_error("chi2_cdf: requires x >= 0");
    return detail::reg_lower_gamma(0.5 * df, 0.5 * x);
}

inline double f_cdf(double s, FDist d) {
    if (s < 0.0)
        throw std::domain_error("f_cdf: requires s >= 0");
    if (std::isinf(s)) return 1.0;
    const double x = d.nu1 * s / (d.nu1 * s + d.nu2);
    return reg_inc_beta(0.5 * d.nu1, 0.5 * d.nu2, x);
}

// F quantile by bracket expansion plus hybrid secant/bisection on f_cdf,
// solved on the log scale so tail quantiles keep relative precision.
inline double f_quantile(double p, FDist d) {
    if (!(p > 0.0 && p < 1.0))
        throw std::domain_error("f_quantile: requires 0 < p < 1");
    double lo = 1.0, hi = 1.0;
    double flo = f_cdf(lo, d);
    double fhi = flo;
    for (int i = 0; i < 200 && flo > p; ++i) {
        hi = lo;
        fhi = flo;
        lo *= 0.5;
        flo = f_cdf(lo, d);
    }
    for (int i = 0; i < 200 && fhi < p; ++i) {
        lo = hi;
        flo = fhi;
        hi *= 2.0;
        fhi = f_cdf(hi, d);
    }
    const double t = detail::solve_monotone(
        [&](double u) { return f_cdf(std::exp(u), d); }, p, std::log(lo),
        std::log(hi), flo, fhi, 1e-14, 200);
    return std::exp(t);
}

inline double t_cdf(double t, double df) {
    if (!(df > 0.0))
        throw std::domain_error("t_cdf: requires df > 0");
    if (t == 0.0) return 0.5;
    const double x = df / (df + t * t);
    const double half_tail = 0.5 * reg_inc_beta(0.5 * df, 0.5, x);
    return t > 0.0 ? 1.0 - half_tail : half_tail;
}

// Student-t quantile via root solving on the incomplete-beta form of the CDF.
inline double t_quantile(double p, int df) {
    if (!(p > 0.0 && p < 1.0))
        throw std::domain_error("t_quantile: requires 0 < p < 1");
    if (df < 1)
        throw std::domain_error("t_quantile: requires df >= 1");
    if (p == 0.5) return 0.0;
    if (p < 0.5) return -t_quantile(1.0 - p, df);
    double lo = 0.0, flo = 0.5;
    double hi = 1.0, fhi = t_cdf(hi, df);
    for (int i = 0; i < 200 && fhi < p; ++i) {
        lo = hi;
        flo = fhi;
        hi *= 2.0;
        fhi = t_cdf(hi, df);
    }
    return detail::solve_monotone([&](double t) { return t_cdf(t, df); }, p, lo, hi,
                                  flo, fhi, 1e-12 * std::max(1.0, hi), 200);
}

// ---------------------------------------------------------------------------
// seeded sampling
// ---------------------------------------------------------------------------

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

}  // namespace detail

// xoshiro256++ generator, period 2^256 - 1, seeded through splitmix64.
class Rng {
  public:
    explicit Rng(Seed seed) {
        std::uint64_t sm = seed.value;
        for (auto& word : state_) word = detail::splitmix64(sm);
    }

    std::uint64_t next_u64() {
        const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
        const std::uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = rotl(state_[3], 45);
        return result;
    }

    // uniform on the open interval (0,1), 53-bit resolution
    double uniform() {
        return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
    }

    // standard normal via the exact inverse-CDF transform
    double normal() { return normal_quantile(uniform()); }

  private:
    static std::uint64_t rotl(std::uint64_t x, int k) {
        return (x << k) | (x >> (64 - k));
    }
    std::uint64_t state_[4];
};

// Independent per-task seed derived from (master seed, task index).
inline Seed derive_seed(Seed master, std::uint64_t index) {
    std::uint64_t sm = master.value ^ (0x9E3779B97F4A7C15ULL * (index + 1));
    const std::uint64_t a = detail::splitmix64(sm);
    return Seed{a ^ detail::splitmix64(sm)};
}

// Marsaglia-Tsang gamma sampler (unit scale).
inline double sample_gamma(double shape, Rng& rng) {
    if (!(shape > 0.0))
        throw std::domain_error("sample_gamma: requires shape > 0");
    if (shape < 1.0) {
        const double u = rng.uniform();
        return sample_gamma(shape + 1.0, rng) * std::pow(u, 1.0 / shape);
    }
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
        double x = rng.normal();
        double v = 1.0 + c * x;
        if (v <= 0.0) continue;
        v = v * v * v;
        const double u = rng.uniform();
        if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
        if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
    }
}

inline double sample_chi2(double df, Rng& rng) {
    return 2.0 * sample_gamma(0.5 * df, rng);
}

// One draw of rho * (chi2_nu1/nu1) / (chi2_nu2/nu2).
inline double sample_f(FDist d, double rho, Rng& rng) {
    if (!(rho > 0.0))
        throw std::domain_error("sample_f: requires rho > 0");
    const double num = sample_chi2(d.nu1, rng) / d.nu1;
    const double den = sample_chi2(d.nu2, rng) / d.nu2;
    return rho * num / den;
}

inline double sample_normal(double mean, double sd, Rng& rng) {
    if (sd < 0.0)
        throw std::domain_error("sample_normal: requires sd >= 0");
    return mean + sd * rng.normal();
}

}  // namespace varmeta
