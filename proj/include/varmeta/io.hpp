#pragma once

// Study-table ingestion and result serialization.  Input is
// delimiter-separated text (comma, semicolon or tab, sniffed from the
// header) in one of two layouts:
//   study_id,n1,mean1,sd1,n2,mean2,sd2   per-arm summaries (means optional)
//   study_id,f,nu1,nu2                   precomputed ratios
// Reports are a single JSON document; parse_report reads one back.

#include <charconv>
#include <cmath>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <unordered_set>
#include <vector>

#include <json.hpp>

#include "varmeta/diagnostics.hpp"
#include "varmeta/estimators.hpp"
#include "varmeta/meta_tests.hpp"
#include "varmeta/simulation.hpp"

namespace varmeta {

struct StudySummary {
    std::string study_id;
    int n1 = 0;
    std::optional<double> mean1;
    double sd1 = 0.0;
    int n2 = 0;
    std::optional<double> mean2;
    double sd2 = 0.0;

    StudyF to_study() const { return StudyF(sd1 * sd1 / (sd2 * sd2), n1, n2); }
};

struct StudyTable {
    std::vector<std::string> ids;
    std::vector<StudyF> studies;
    std::vector<std::optional<StudySummary>> summaries;

    std::size_t size() const { return studies.size(); }
};

class ingest_error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

namespace detail {

inline std::vector<std::string> split(const std::string& line, char delim) {
    std::vector<std::string> out;
    std::string field;
    std::istringstream ss(line);
    while (std::getline(ss, field, delim)) {
        while (!field.empty() && (field.back() == '\r' || field.back() == ' '))
            field.pop_back();
        std::size_t start = field.find_first_not_of(' ');
        out.push_back(start == std::string::npos ? "" : field.substr(start));
    }
    if (!line.empty() && line.back() == delim) out.push_back("");
    return out;
}

inline char sniff_delimiter(const std::string& header) {
    for (char c : {',', '\t', ';'})
        if (header.find(c) != std::string::npos) return c;
    return ',';
}

inline double parse_number(const std::string& field, int row, const char* col) {
    double value{};
    const char* first = field.data();
    const char* last = field.data() + field.size();
    auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc() || ptr != last)
        throw ingest_error("row " + std::to_string(row) + ": non-numeric value '" +
                           field + "' in column " + col);
    return value;
}

inline int parse_count(const std::string& field, int row, const char* col) {
    const double v = parse_number(field, row, col);
    const double r = std::round(v);
    if (std::fabs(v - r) > 1e-9 || r < 2)
        throw ingest_error("row " + std::to_string(row) + ": column " + col +
                           " must be an integer >= 2, got '" + field + "'");
    return static_cast<int>(r);
}

}  // namespace detail

inline StudyTable ingest_text(const std::string& text,
                              const std::string& source = "<input>") {
    std::istringstream in(text);
    std::string header;
    if (!std::getline(in, header))
        throw ingest_error(source + ": empty file");
    const char delim = detail::sniff_delimiter(header);
    auto cols = detail::split(header, delim);
    for (auto& c : cols)
        while (!c.empty() && (c.back() == '\r' || c.back() == ' ')) c.pop_back();

    const std::vector<std::string> summary_cols = {"study_id", "n1", "mean1", "sd1",
                                                   "n2", "mean2", "sd2"};
    const std::vector<std::string> direct_cols = {"study_id", "f", "nu1", "nu2"};
    const bool summary_form = cols == summary_cols;
    const bool direct_form = cols == direct_cols;
    if (!summary_form && !direct_form)
        throw ingest_error(source + ": unrecognized header; expected "
                           "study_id,n1,mean1,sd1,n2,mean2,sd2 or study_id,f,nu1,nu2");

    StudyTable table;
    std::unordered_set<std::string> seen;
    std::string line;
    int row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (line.empty() || line == "\r") continue;
        auto fields = detail::split(line, delim);
        if (fields.size() != cols.size())
            throw ingest_error("row " + std::to_string(row) + ": expected " +
                               std::to_string(cols.size()) + " fields, got " +
                               std::to_string(fields.size()));
        const std::string& id = fields[0];
        if (id.empty())
            throw ingest_error("row " + std::to_string(row) + ": empty study_id");
        if (!seen.insert(id).second)
            throw ingest_error("row " + std::to_string(row) + ": duplicate study_id '" +
                               id + "'");
        if (summary_form) {
            StudySummary s;
            s.study_id = id;
            s.n1 = detail::parse_count(fields[1], row, "n1");
            if (!fields[2].empty()) s.mean1 = detail::parse_number(fields[2], row, "mean1");
            s.sd1 = detail::parse_number(fields[3], row, "sd1");
            s.n2 = detail::parse_count(fields[4], row, "n2");
            if (!fields[5].empty()) s.mean2 = detail::parse_number(fields[5], row, "mean2");
            s.sd2 = detail::parse_number(fields[6], row, "sd2");
            if (!(s.sd1 > 0.0))
                throw ingest_error("row " + std::to_string(row) + ": sd1 must be > 0");
            if (!(s.sd2 > 0.0))
                throw ingest_error("row " + std::to_string(row) + ": sd2 must be > 0");
            table.ids.push_back(id);
            table.studies.push_back(s.to_study());
            table.summaries.push_back(std::move(s));
        } else {
            const double f = detail::parse_number(fields[1], row, "f");
            const double nu1 = detail::parse_number(fields[2], row, "nu1");
            const double nu2 = detail::parse_number(fields[3], row, "nu2");
            if (!(f > 0.0))
                throw ingest_error("row " + std::to_string(row) + ": f must be > 0");
            const double r1 = std::round(nu1), r2 = std::round(nu2);
            if (std::fabs(nu1 - r1) > 1e-9 || std::fabs(nu2 - r2) > 1e-9 ||
                r1 < 1 || r2 < 1)
                throw ingest_error("row " + std::to_string(row) +
                                   ": nu1/nu2 must be integers >= 1");
            table.ids.push_back(id);
            table.studies.push_back(StudyF(f, static_cast<int>(r1) + 1,
                                           static_cast<int>(r2) + 1));
            table.summaries.push_back(std::nullopt);
        }
    }
    if (table.studies.empty())
        throw ingest_error(source + ": no data rows");
    return table;
}

inline StudyTable ingest(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw ingest_error(path + ": cannot open");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ingest_text(ss.str(), path);
}

// ---------------------------------------------------------------------------
// JSON report
// ---------------------------------------------------------------------------

using json = nlohmann::json;

inline json to_json(const MetaTestResult& r) {
    json j{{"statistic", r.statistic}, {"p_value", r.p_value}, {"method", name(r.method)}};
    if (r.mc_replicates > 0) j["mc_replicates"] = r.mc_replicates;
    return j;
}

inline json to_json(const RatioEstimate& e) {
    json j{{"model", name(e.model)},       {"rho_hat", e.rho_hat},
           {"ci_low", e.ci_low},           {"ci_high", e.ci_high},
           {"log_variance", e.log_variance}, {"alpha", e.alpha}};
    if (e.tau2_hat) j["tau2_hat"] = *e.tau2_hat;
    if (e.tau2_se) j["tau2_se"] = *e.tau2_se;
    if (e.tau2_boundary) j["tau2_boundary"] = true;
    return j;
}

inline json to_json(const ForestRow& r) {
    return json{{"study_id", r.study_id}, {"ratio", r.ratio},       {"ci_low", r.ci_low},
                {"ci_high", r.ci_high},   {"p_value", r.p_value}};
}

inline json to_json(const QQData& q) {
    json points = json::array();
    for (const auto& p : q.points) points.push_back({p.theoretical, p.observed});
    return json{{"transform", name(q.transform)}, {"points", points}};
}

inline json to_json(const IncrementalCurve& c, const std::vector<std::string>& ids) {
    json steps = json::array();
    for (const auto& s : c.steps) {
        json inc = json::array();
        for (std::size_t idx : s.included) inc.push_back(ids[idx]);
        steps.push_back({{"k_star", s.k_star}, {"included", inc}, {"p_value", s.p_value}});
    }
    return json{{"statistic", c.statistic == OmnibusStatistic::zw ? "Zw" : "X2w"},
                {"transform", name(c.transform)},
                {"steps", steps}};
}

struct AnalysisReport {
    std::vector<ForestRow> studies;
    std::vector<MetaTestResult> omnibus;
    RatioEstimate estimate;
    QQData qq;
    IncrementalCurve incremental;
    std::vector<std::string> ids;
    json config;
};

inline json to_json(const AnalysisReport& r) {
    json studies = json::array();
    for (const auto& row : r.studies) studies.push_back(to_json(row));
    json omnibus = json::object();
    for (const auto& t : r.omnibus) omnibus[name(t.method)] = to_json(t);
    return json{{"studies", studies},
                {"omnibus", omnibus},
                {"estimate", to_json(r.estimate)},
                {"qq", to_json(r.qq)},
                {"incremental", to_json(r.incremental, r.ids)},
                {"config", r.config}};
}

// Reads an emitted report back; numbers survive the round trip exactly
// (serialization uses shortest-exact formatting).
struct ParsedReport {
    std::vector<ForestRow> studies;
    std::vector<MetaTestResult> omnibus;
    RatioEstimate estimate;
    std::vector<std::pair<double, double>> qq_points;
    std::vector<std::pair<int, double>> incremental;  // (k_star, p)
};

inline ParsedReport parse_report(const json& j) {
    ParsedReport out;
    for (const auto& s : j.at("studies")) {
        ForestRow row;
        row.study_id = s.at("study_id").get<std::string>();
        row.ratio = s.at("ratio").get<double>();
        row.ci_low = s.at("ci_low").get<double>();
        row.ci_high = s.at("ci_high").get<double>();
        row.p_value = s.at("p_value").get<double>();
        out.studies.push_back(std::move(row));
    }
    for (const auto& [key, t] : j.at("omnibus").items()) {
        MetaTestResult r;
        r.statistic = t.at("statistic").get<double>();
        r.p_value = t.at("p_value").get<double>();
        if (key == "Z") r.method = MetaMethod::z;
        else if (key == "X2") r.method = MetaMethod::x2;
        else if (key == "Zw") r.method = MetaMethod::zw;
        else r.method = MetaMethod::x2w;
        if (t.contains("mc_replicates")) r.mc_replicates = t.at("mc_replicates").get<std::uint64_t>();
        out.omnibus.push_back(r);
    }
    const auto& e = j.at("estimate");
    out.estimate.rho_hat = e.at("rho_hat").get<double>();
    out.estimate.ci_low = e.at("ci_low").get<double>();
    out.estimate.ci_high = e.at("ci_high").get<double>();
    out.estimate.log_variance = e.at("log_variance").get<double>();
    out.estimate.alpha = e.at("alpha").get<double>();
    if (e.contains("tau2_hat")) out.estimate.tau2_hat = e.at("tau2_hat").get<double>();
    if (e.contains("tau2_se")) out.estimate.tau2_se = e.at("tau2_se").get<double>();
    for (const auto& p : j.at("qq").at("points"))
        out.qq_points.emplace_back(p.at(0).get<double>(), p.at(1).get<double>());
    for (const auto& s : j.at("incremental").at("steps"))
        out.incremental.emplace_back(s.at("k_star").get<int>(), s.at("p_value").get<double>());
    return out;
}

// ---------------------------------------------------------------------------
// delimiter-separated tables (simulation output, plot data)
// ---------------------------------------------------------------------------

namespace detail {

inline std::string format_g17(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace detail

inline std::string to_tsv(const SizeGrid& grid) {
    std::ostringstream out;
    out << "nu1\\nu2";
    for (double n2 : grid.nu2) out << '\t' << detail::format_g17(n2);
    out << '\n';
    for (std::size_t i = 0; i < grid.nu1.size(); ++i) {
        out << detail::format_g17(grid.nu1[i]);
        for (std::size_t jcol = 0; jcol < grid.nu2.size(); ++jcol) {
            const double v = grid.at(i, jcol);
            out << '\t' << (std::isnan(v) ? "NA" : detail::format_g17(v));
        }
        out << '\n';
    }
    return out.str();
}

inline std::string to_tsv(const EstimatorTable& table) {
    std::ostringstream out;
    out << "method\tbias\tcoverage\twidth\tbias_tau\n";
    for (const auto& row : table.rows) {
        out << name(row.method) << '\t' << detail::format_g17(row.bias) << '\t'
            << detail::format_g17(row.coverage) << '\t' << detail::format_g17(row.width)
            << '\t' << (row.bias_tau ? detail::format_g17(*row.bias_tau) : std::string("NA"))
            << '\n';
    }
    return out.str();
}

inline std::string to_tsv(const std::vector<CohensDRow>& rows) {
    std::ostringstream out;
    out << "n1\tmean_d\tsd_d\n";
    for (const auto& r : rows)
        out << r.n1 << '\t' << detail::format_g17(r.mean_d) << '\t'
            << detail::format_g17(r.sd_d) << '\n';
    return out.str();
}

inline std::string to_tsv(const QQData& q) {
    std::ostringstream out;
    out << "theoretical\tobserved\n";
    for (const auto& p : q.points)
        out << detail::format_g17(p.theoretical) << '\t' << detail::format_g17(p.observed)
            << '\n';
    return out.str();
}

inline std::string to_tsv(const std::vector<ForestRow>& rows) {
    std::ostringstream out;
    out << "study_id\tratio\tci_low\tci_high\tp_value\n";
    for (const auto& r : rows)
        out << r.study_id << '\t' << detail::format_g17(r.ratio) << '\t'
            << detail::format_g17(r.ci_low) << '\t' << detail::format_g17(r.ci_high)
            << '\t' << detail::format_g17(r.p_value) << '\n';
    return out.str();
}

inline std::string to_tsv(const IncrementalCurve& curve,
                          const std::vector<std::string>& ids) {
    std::ostringstream out;
    out << "k_star\tp_value\tincluded\n";
    for (const auto& s : curve.steps) {
        out << s.k_star << '\t' << detail::format_g17(s.p_value) << '\t';
        for (std::size_t i = 0; i < s.included.size(); ++i) {
            if (i) out << ',';
            out << ids[s.included[i]];
        }
        out << '\n';
    }
    return out.str();
}

}  // namespace varmeta
