#pragma once

// Seeded reproduction of the simulation experiments: empirical-size grids,
// transform-normality samples, estimator bias/coverage/width tables, and
// the Cohen's d sensitivity table.  Replicates draw from generators derived
// per (seed, replicate) so results are independent of any partitioning of
// the replicate loop; accumulators use compensated summation.

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "varmeta/estimators.hpp"
#include "varmeta/special.hpp"
#include "varmeta/vst.hpp"

namespace varmeta {

struct SimDesign {
    std::vector<std::pair<int, int>> arm_sizes;
    double rho = 1.0;
    double tau = 0.0;
    int replicates = 1000;
    double alpha = 0.05;
    Seed seed{};

    void validate() const {
        if (arm_sizes.empty())
            throw std::invalid_argument("SimDesign: no studies");
        for (auto [n1, n2] : arm_sizes)
            if (n1 < 2 || n2 < 2)
                throw std::invalid_argument("SimDesign: arm sizes must be >= 2");
        if (!(rho > 0.0)) throw std::invalid_argument("SimDesign: rho must be > 0");
        if (tau < 0.0) throw std::invalid_argument("SimDesign: tau must be >= 0");
        if (replicates < 100)
            throw std::invalid_argument("SimDesign: replicates must be >= 100");
        if (!(alpha > 0.0 && alpha < 1.0))
            throw std::invalid_argument("SimDesign: alpha in (0,1)");
    }
};

enum class MethodTag { t1, t3, fe, re };

inline const char* name(MethodTag m) {
    switch (m) {
        case MethodTag::t1: return "T1";
        case MethodTag::t3: return "T3";
        case MethodTag::fe: return "FE";
        case MethodTag::re: return "RE";
    }
    return "?";
}

struct SimRow {
    MethodTag method = MethodTag::t1;
    double bias = 0.0;
    double coverage = 0.0;
    double width = 0.0;
    std::optional<double> bias_tau;  // RE only: mean(tau_hat) - tau
};

struct EstimatorTable {
    std::vector<SimRow> rows;
    int used_replicates = 0;
    int failed_replicates = 0;
};

namespace detail {

// Kahan accumulator; order-independent aggregation to working precision.
class CompensatedSum {
  public:
    void add(double x) {
        const double y = x - c_;
        const double t = s_ + y;
        c_ = (t - s_) - y;
        s_ = t;
    }
    double value() const { return s_; }

  private:
    double s_ = 0.0;
    double c_ = 0.0;
};

}  // namespace detail

// One study ratio: rho_k = exp(ln rho + tau N(0,1)), s = rho_k F(nu1,nu2).
inline double draw_study_ratio(FDist d, double rho, double tau, Rng& rng) {
    if (!(rho > 0.0))
        throw std::domain_error("draw_study_ratio: requires rho > 0");
    if (tau < 0.0)
        throw std::domain_error("draw_study_ratio: requires tau >= 0");
    const double rho_k = tau > 0.0 ? std::exp(std::log(rho) + tau * rng.normal()) : rho;
    return sample_f(d, rho_k, rng);
}

struct SizeGrid {
    std::vector<double> nu1;                 // row labels
    std::vector<double> nu2;                 // column labels
    std::vector<double> size;                // row-major; NaN = undefined cell
    TransformKind transform = TransformKind::t3;
    double alpha = 0.05;
    int replicates = 0;

    double at(std::size_t i, std::size_t j) const { return size[i * nu2.size() + j]; }
};

// Empirical size per (nu1, nu2) cell: fraction of null replicates with
// Z^2 > z^2_{1-alpha/2}.  Cells where the transform is undefined
// (T1/T2 with nu2 <= 4) are NaN.
inline SizeGrid size_grid(TransformKind kind, std::span<const double> nu_grid,
                          double alpha, int replicates, Seed seed) {
    if (nu_grid.empty())
        throw std::invalid_argument("size_grid: empty grid");
    if (replicates < 1)
        throw std::invalid_argument("size_grid: replicates must be >= 1");
    detail::check_alpha(alpha);
    SizeGrid grid;
    grid.nu1.assign(nu_grid.begin(), nu_grid.end());
    grid.nu2.assign(nu_grid.begin(), nu_grid.end());
    grid.transform = kind;
    grid.alpha = alpha;
    grid.replicates = replicates;
    grid.size.assign(nu_grid.size() * nu_grid.size(), 0.0);

    const double z = normal_quantile(1.0 - 0.5 * alpha);
    const double cutoff = z * z;
    std::size_t cell = 0;
    for (double n1 : grid.nu1) {
        for (double n2 : grid.nu2) {
            const FDist d(n1, n2);
            if (!supports(kind, d)) {
                grid.size[cell++] = std::numeric_limits<double>::quiet_NaN();
                continue;
            }
            const VstConstants c = constants(d);
            Rng rng(derive_seed(seed, cell));
            int reject = 0;
            for (int r = 0; r < replicates; ++r) {
                const double s = sample_f(d, 1.0, rng);
                const double zk = transform(kind, s, 1.0, c);
                if (zk * zk > cutoff) ++reject;
            }
            grid.size[cell++] = static_cast<double>(reject) / replicates;
        }
    }
    return grid;
}

// n transformed null draws (histogram material).
inline std::vector<double> transform_samples(TransformKind kind, FDist d, int n,
                                             Seed seed) {
    if (n < 1)
        throw std::invalid_argument("transform_samples: n must be >= 1");
    if (!supports(kind, d))
        throw dof_error(std::string(name(kind)) + " requires nu2 > 4");
    const VstConstants c = constants(d);
    Rng rng(seed);
    std::vector<double> out(static_cast<std::size_t>(n));
    for (auto& v : out) v = transform(kind, sample_f(d, 1.0, rng), 1.0, c);
    return out;
}

// Per-method bias, coverage and width over seeded replicates; a replicate
// is skipped (and counted) if any requested method fails on it.
inline EstimatorTable estimator_table(const SimDesign& design,
                                      std::span<const MethodTag> methods) {
    design.validate();
    if (methods.empty())
        throw std::invalid_argument("estimator_table: no methods");

    std::vector<FDist> dists;
    dists.reserve(design.arm_sizes.size());
    for (auto [n1, n2] : design.arm_sizes) dists.emplace_back(n1 - 1.0, n2 - 1.0);
    const std::size_t K = dists.size();

    struct Acc {
        detail::CompensatedSum bias, width, tau;
        long covered = 0;
    };
    std::vector<Acc> acc(methods.size());
    int used = 0, failed = 0;

    std::vector<StudyF> studies;
    for (int rep = 0; rep < design.replicates; ++rep) {
        Rng rng(derive_seed(design.seed, static_cast<std::uint64_t>(rep)));
        studies.clear();
        for (std::size_t k = 0; k < K; ++k)
            studies.emplace_back(draw_study_ratio(dists[k], design.rho, design.tau, rng),
                                 design.arm_sizes[k].first, design.arm_sizes[k].second);

        std::vector<RatioEstimate> ests;
        ests.reserve(methods.size());
        bool ok = true;
        for (MethodTag m : methods) {
            try {
                switch (m) {
                    case MethodTag::t1:
                        ests.push_back(vst_pivot_estimate(studies, default_weights(studies),
                                                          design.alpha));
                        break;
                    case MethodTag::t3:
                        ests.push_back(vst_root_estimate(studies, default_weights(studies),
                                                         TransformKind::t3, design.alpha));
                        break;
                    case MethodTag::fe:
                        ests.push_back(f_density_fe_mle(studies, design.alpha));
                        break;
                    case MethodTag::re:
                        ests.push_back(normal_re_mle(studies, design.alpha));
                        break;
                }
            } catch (const std::exception&) {
                ok = false;
                break;
            }
        }
        if (!ok) {
            ++failed;
            continue;
        }
        ++used;
        for (std::size_t i = 0; i < methods.size(); ++i) {
            const auto& e = ests[i];
            acc[i].bias.add(e.rho_hat - design.rho);
            acc[i].width.add(e.ci_high - e.ci_low);
            if (e.ci_low <= design.rho && design.rho <= e.ci_high) ++acc[i].covered;
            if (methods[i] == MethodTag::re)
                acc[i].tau.add(std::sqrt(std::max(0.0, e.tau2_hat.value_or(0.0))));
        }
    }

    EstimatorTable table;
    table.used_replicates = used;
    table.failed_replicates = failed;
    const double n = std::max(1, used);
    for (std::size_t i = 0; i < methods.size(); ++i) {
        SimRow row;
        row.method = methods[i];
        row.bias = acc[i].bias.value() / n;
        row.coverage = static_cast<double>(acc[i].covered) / n;
        row.width = acc[i].width.value() / n;
        if (methods[i] == MethodTag::re)
            row.bias_tau = acc[i].tau.value() / n - design.tau;
        table.rows.push_back(row);
    }
    return table;
}

struct CohensDRow {
    int n1 = 0;
    double mean_d = 0.0;
    double sd_d = 0.0;
};

// Cohen's d with pooled SD over two normal arms; reports the mean and SD
// of d across replicates for each first-arm size.
inline std::vector<CohensDRow> cohens_d_table(std::span<const int> n1_values,
                                              int total_n,
                                              std::pair<double, double> mu,
                                              std::pair<double, double> sd,
                                              int replicates, Seed seed) {
    if (replicates < 2)
        throw std::invalid_argument("cohens_d_table: replicates must be >= 2");
    if (!(sd.first > 0.0) || !(sd.second > 0.0))
        throw std::invalid_argument("cohens_d_table: sd must be > 0");
    std::vector<CohensDRow> out;
    std::uint64_t stream = 0;
    for (int n1 : n1_values) {
        const int n2 = total_n - n1;
        if (n1 < 2 || n2 < 2)
            throw std::invalid_argument("cohens_d_table: needs 2 <= n1 <= total_n - 2");
        detail::CompensatedSum sum, sumsq;
        for (int rep = 0; rep < replicates; ++rep) {
            Rng rng(derive_seed(seed, stream++));
            double m1 = 0.0, m2 = 0.0, ss1 = 0.0, ss2 = 0.0;
            // Welford accumulation per arm
            for (int i = 0; i < n1; ++i) {
                const double x = sample_normal(mu.first, sd.first, rng);
                const double d = x - m1;
                m1 += d / (i + 1);
                ss1 += d * (x - m1);
            }
            for (int i = 0; i < n2; ++i) {
                const double x = sample_normal(mu.second, sd.second, rng);
                const double d = x - m2;
                m2 += d / (i + 1);
                ss2 += d * (x - m2);
            }
            const double sp2 = (ss1 + ss2) / (n1 + n2 - 2.0);
            const double d = (m1 - m2) / std::sqrt(sp2);
            sum.add(d);
            sumsq.add(d * d);
        }
        const double mean = sum.value() / replicates;
        const double var = (sumsq.value() - replicates * mean * mean) / (replicates - 1.0);
        out.push_back({n1, mean, std::sqrt(std::max(0.0, var))});
    }
    return out;
}

}  // namespace varmeta
