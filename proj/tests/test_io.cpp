#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>

#include "varmeta/bmd.hpp"
#include "varmeta/io.hpp"
#include "varmeta/svg.hpp"

using namespace varmeta;
using Catch::Approx;

TEST_CASE("ingest summary form") {
    const std::string text =
        "study_id,n1,mean1,sd1,n2,mean2,sd2\n"
        "a,10,1.5,0.4,20,1.4,0.2\n"
        "b,8,,0.3,12,,0.6\n";
    const auto table = ingest_text(text);
    REQUIRE(table.size() == 2);
    CHECK(table.ids[0] == "a");
    CHECK(table.studies[0].s == Approx(4.0).epsilon(1e-14));
    CHECK(table.studies[0].n1 == 10);
    CHECK(table.studies[0].n2 == 20);
    REQUIRE(table.summaries[0]);
    CHECK(table.summaries[0]->mean1.value() == 1.5);
    CHECK_FALSE(table.summaries[1]->mean1.has_value());
    CHECK(table.studies[1].s == Approx(0.25).epsilon(1e-14));
}

TEST_CASE("ingest direct-F form") {
    const std::string text =
        "study_id,f,nu1,nu2\n"
        "s1,0.79,6,68\n"
        "s2,2.18,70,338\n";
    const auto table = ingest_text(text);
    REQUIRE(table.size() == 2);
    CHECK(table.studies[0].s == Approx(0.79).epsilon(1e-14));
    CHECK(table.studies[0].n1 == 7);
    CHECK(table.studies[0].n2 == 69);
    CHECK_FALSE(table.summaries[0].has_value());
}

TEST_CASE("ingest accepts tab and semicolon delimiters") {
    const auto t1 = ingest_text("study_id\tf\tnu1\tnu2\nx\t1.5\t10\t12\n");
    CHECK(t1.studies[0].s == 1.5);
    const auto t2 = ingest_text("study_id;f;nu1;nu2\nx;1.5;10;12\n");
    CHECK(t2.studies[0].n2 == 13);
}

TEST_CASE("ingest diagnostics carry row numbers") {
    const std::string head = "study_id,n1,mean1,sd1,n2,mean2,sd2\n";
    CHECK_THROWS_WITH(ingest_text(head), Catch::Matchers::ContainsSubstring("no data rows"));
    CHECK_THROWS_WITH(ingest_text(head + "a,10,1,0.4,20,1,0\n"),
                      Catch::Matchers::ContainsSubstring("row 2"));
    CHECK_THROWS_WITH(ingest_text(head + "a,10,1,0.4,20,1,0.5\na,9,1,0.2,9,1,0.2\n"),
                      Catch::Matchers::ContainsSubstring("duplicate"));
    CHECK_THROWS_WITH(ingest_text(head + "a,10,1,abc,20,1,0.5\n"),
                      Catch::Matchers::ContainsSubstring("non-numeric"));
    CHECK_THROWS_WITH(ingest_text(head + "a,1,1,0.3,20,1,0.5\n"),
                      Catch::Matchers::ContainsSubstring("n1"));
    CHECK_THROWS_WITH(ingest_text("bogus,header\nrow\n"),
                      Catch::Matchers::ContainsSubstring("header"));
    CHECK_THROWS_AS(ingest("/nonexistent/path.csv"), ingest_error);
}

TEST_CASE("bundled dataset file matches the embedded fixture") {
    const auto from_file = ingest(std::string(TEST_DATA_DIR) + "/bmd.csv");
    const auto embedded = bmd_table();
    REQUIRE(from_file.size() == 13);
    const std::vector<double> printed = {0.79, 0.01, 0.64, 1.46, 1.82, 1.33, 0.34,
                                         1.33, 2.18, 1.81, 1.01, 1.17, 1.13};
    for (std::size_t i = 0; i < 13; ++i) {
        CHECK(from_file.ids[i] == embedded.ids[i]);
        CHECK(from_file.studies[i].s == Approx(embedded.studies[i].s).epsilon(1e-13));
        CHECK(std::round(from_file.studies[i].s * 100.0) / 100.0 ==
              Approx(printed[i]).margin(1e-12));
    }
}

TEST_CASE("report round trip preserves numbers exactly") {
    const auto table = bmd_table();
    AnalysisReport report;
    report.ids = table.ids;
    for (std::size_t i = 0; i < table.size(); ++i)
        report.studies.push_back(study_f_test(table.studies[i], 0.05, table.ids[i]));
    ZVector zs;
    for (const auto& st : table.studies) {
        zs.z.push_back(transform(TransformKind::t3, st.s, 1.0, st.dist()));
        zs.kinds.push_back(TransformKind::t3);
        zs.dofs.push_back(st.dist());
    }
    const auto w = default_weights(table.studies);
    report.omnibus = {z_mean_test(zs), x2_sum_test(zs), z_weighted_test(zs, w),
                      x2_weighted_test(zs, w, 5000, Seed{5})};
    report.estimate = normal_re_mle(table.studies, 0.05);
    report.qq = qq_data(table.studies, TransformKind::t3);
    report.incremental = incremental_pvalues(table.studies, TransformKind::t3);
    report.config = json{{"transform", "T3"}, {"model", "re"}};

    const json j = to_json(report);
    const std::string text = j.dump(2);
    const json parsed_json = json::parse(text);
    const auto parsed = parse_report(parsed_json);

    REQUIRE(parsed.studies.size() == report.studies.size());
    for (std::size_t i = 0; i < parsed.studies.size(); ++i) {
        CHECK(parsed.studies[i].ratio == report.studies[i].ratio);
        CHECK(parsed.studies[i].ci_low == report.studies[i].ci_low);
        CHECK(parsed.studies[i].ci_high == report.studies[i].ci_high);
        CHECK(parsed.studies[i].p_value == report.studies[i].p_value);
    }
    CHECK(parsed.estimate.rho_hat == report.estimate.rho_hat);
    CHECK(parsed.estimate.ci_low == report.estimate.ci_low);
    CHECK(parsed.estimate.ci_high == report.estimate.ci_high);
    CHECK(parsed.estimate.log_variance == report.estimate.log_variance);
    CHECK(*parsed.estimate.tau2_hat == *report.estimate.tau2_hat);
    REQUIRE(parsed.qq_points.size() == report.qq.points.size());
    for (std::size_t i = 0; i < parsed.qq_points.size(); ++i) {
        CHECK(parsed.qq_points[i].first == report.qq.points[i].theoretical);
        CHECK(parsed.qq_points[i].second == report.qq.points[i].observed);
    }
    for (std::size_t i = 0; i < parsed.incremental.size(); ++i)
        CHECK(parsed.incremental[i].second == report.incremental.steps[i].p_value);
}

TEST_CASE("tsv serializers") {
    const std::vector<double> grid = {10.0, 20.0};
    const auto g = size_grid(TransformKind::t3, grid, 0.05, 1000, Seed{6});
    const auto tsv = to_tsv(g);
    CHECK(tsv.find("nu1\\nu2") == 0);
    CHECK(std::count(tsv.begin(), tsv.end(), '\n') == 3);

    const auto rows = cohens_d_table(std::vector<int>{10}, 40, {1.0, 1.0},
                                     {0.2, 0.2}, 500, Seed{7});
    const auto dtsv = to_tsv(rows);
    CHECK(dtsv.find("n1\tmean_d\tsd_d\n") == 0);
}

TEST_CASE("svg renderers emit well-formed documents") {
    const auto table = bmd_table();
    const auto qq = qq_data(table.studies, TransformKind::t3);
    const auto s1 = svg::render(qq);
    CHECK(s1.find("<svg") == 0);
    CHECK(s1.rfind("</svg>\n") == s1.size() - 7);

    std::vector<ForestRow> rows;
    for (std::size_t i = 0; i < table.size(); ++i)
        rows.push_back(study_f_test(table.studies[i], 0.05, table.ids[i]));
    const auto overall = normal_re_mle(table.studies, 0.05);
    const auto s2 = svg::render(rows, &overall);
    CHECK(s2.find("Overall") != std::string::npos);

    const auto curve = incremental_pvalues(table.studies, TransformKind::t3);
    const auto s3 = svg::render(curve);
    CHECK(s3.find("<path") != std::string::npos);

    const std::vector<double> grid = {10.0, 20.0};
    const auto g = size_grid(TransformKind::t3, grid, 0.05, 500, Seed{8});
    const auto s4 = svg::render(g);
    CHECK(s4.find("<rect") != std::string::npos);
}
