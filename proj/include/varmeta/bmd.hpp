#pragma once

// Bundled example dataset: 13 two-arm bone-mineral-density studies.  The
// second arm of each study combines two reported subgroups; the combined
// summary is computed exactly from the subgroup summaries (sum of squares
// plus between-group mean adjustment), not from their rounded display.

#include <array>
#include <cmath>
#include <string>
#include <vector>

#include "varmeta/estimators.hpp"
#include "varmeta/io.hpp"

namespace varmeta {

struct GroupSummary {
    int n;
    double mean;
    double sd;
};

// Exact two-group combination: pooled mean and the (n-1)-denominator SD
// recovered from subgroup sums of squares and the mean shift terms.
inline GroupSummary pooled_summary(const GroupSummary& a, const GroupSummary& b) {
    const int n = a.n + b.n;
    const double mean = (a.n * a.mean + b.n * b.mean) / n;
    const double ss = (a.n - 1) * a.sd * a.sd + (b.n - 1) * b.sd * b.sd +
                      a.n * (a.mean - mean) * (a.mean - mean) +
                      b.n * (b.mean - mean) * (b.mean - mean);
    return {n, mean, std::sqrt(ss / (n - 1))};
}

struct BmdStudy {
    const char* id;
    GroupSummary arm1;      // first genotype group
    GroupSummary arm2a;     // first half of the combined comparison arm
    GroupSummary arm2b;     // second half of the combined comparison arm

    GroupSummary arm2() const { return pooled_summary(arm2a, arm2b); }
};

inline const std::array<BmdStudy, 13>& bmd_studies_raw() {
    static const std::array<BmdStudy, 13> rows = {{
        {"1", {7, 0.970, 0.160}, {35, 1.040, 0.170}, {34, 1.000, 0.190}},
        {"2", {2, 1.077, 0.011}, {14, 1.083, 0.099}, {7, 1.099, 0.171}},
        {"3", {15, 1.007, 0.158}, {36, 1.047, 0.227}, {40, 1.003, 0.166}},
        {"4", {12, 0.980, 0.150}, {19, 0.970, 0.120}, {18, 1.000, 0.130}},
        {"5", {38, 0.880, 0.160}, {134, 0.870, 0.110}, {96, 0.860, 0.130}},
        {"6", {77, 0.906, 0.153}, {276, 0.932, 0.136}, {196, 0.924, 0.128}},
        {"7", {8, 0.870, 0.090}, {43, 0.860, 0.160}, {52, 0.890, 0.150}},
        {"8", {107, 0.870, 0.180}, {306, 0.870, 0.160}, {175, 0.870, 0.150}},
        {"9", {71, 0.810, 0.253}, {219, 0.846, 0.186}, {120, 0.897, 0.136}},
        {"10", {46, 1.034, 0.177}, {98, 1.024, 0.137}, {56, 1.041, 0.122}},
        {"11", {27, 0.863, 0.152}, {72, 0.871, 0.167}, {62, 0.929, 0.124}},
        {"12", {25, 0.924, 0.145}, {34, 0.951, 0.138}, {21, 0.944, 0.131}},
        {"13", {19, 0.651, 0.078}, {59, 0.718, 0.070}, {24, 0.723, 0.083}},
    }};
    return rows;
}

// The dataset as an ingested study table (arm 1 vs combined arm 2).
inline StudyTable bmd_table() {
    StudyTable table;
    for (const auto& row : bmd_studies_raw()) {
        const GroupSummary arm2 = row.arm2();
        StudySummary summary;
        summary.study_id = row.id;
        summary.n1 = row.arm1.n;
        summary.mean1 = row.arm1.mean;
        summary.sd1 = row.arm1.sd;
        summary.n2 = arm2.n;
        summary.mean2 = arm2.mean;
        summary.sd2 = arm2.sd;
        table.ids.push_back(row.id);
        table.studies.push_back(summary.to_study());
        table.summaries.push_back(summary);
    }
    return table;
}

// Arm-size pairs of the bundled dataset (simulation designs reuse them).
inline std::vector<std::pair<int, int>> bmd_arm_sizes() {
    std::vector<std::pair<int, int>> sizes;
    for (const auto& row : bmd_studies_raw())
        sizes.emplace_back(row.arm1.n, row.arm2a.n + row.arm2b.n);
    return sizes;
}

}  // namespace varmeta
