// varmeta: meta-analysis of ratios of sample variances from two-arm
// study summaries.  Subcommands: analyze, test, qq, forest, incremental,
// simulate.  Data goes to stdout, diagnostics to stderr; exit status is
// nonzero on any error.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "varmeta/varmeta.hpp"

namespace {

using namespace varmeta;

struct CommonOptions {
    std::string input;
    std::string transform = "T3";
    std::string weights = "inverse-sqrt-c1";
    std::string dof_policy = "error";
    double alpha = 0.05;
    std::uint64_t mc_replicates = 100000;
    std::uint64_t seed = 0;
    bool seed_set = false;
    std::string svg_dir;
};

std::uint64_t env_seed_default() {
    if (const char* env = std::getenv("VARMETA_SEED")) {
        try {
            return std::stoull(env);
        } catch (const std::exception&) {
            std::cerr << "warning: ignoring non-numeric VARMETA_SEED\n";
        }
    }
    return 0;
}

void add_common(CLI::App* cmd, CommonOptions& opt, bool with_mc = true) {
    cmd->add_option("-i,--input", opt.input, "study table (csv/tsv)")->required();
    cmd->add_option("-t,--transform", opt.transform,
                    "transform: T1, T2, T3, T4, inverse-cdf")
        ->check(CLI::IsMember({"T1", "T2", "T3", "T4", "inverse-cdf"}));
    cmd->add_option("-w,--weights", opt.weights, "weight rule")
        ->check(CLI::IsMember({"inverse-sqrt-c1", "equal"}));
    cmd->add_option("--dof-policy", opt.dof_policy,
                    "studies unsupported by the transform: error, drop, or "
                    "fallback (switch to T3/equal weights)")
        ->check(CLI::IsMember({"error", "drop", "fallback"}));
    cmd->add_option("-a,--alpha", opt.alpha, "two-sided level")
        ->check(CLI::Range(1e-6, 0.999999));
    if (with_mc)
        cmd->add_option("-m,--mc-replicates", opt.mc_replicates,
                        "Monte-Carlo replicates for the weighted chi-square null");
    cmd->add_option("-s,--seed", opt.seed, "random seed (VARMETA_SEED overrides the default)")
        ->each([&opt](const std::string&) { opt.seed_set = true; });
    cmd->add_option("--svg", opt.svg_dir, "directory for SVG plot output");
}

Seed effective_seed(const CommonOptions& opt) {
    return Seed{opt.seed_set ? opt.seed : env_seed_default()};
}

struct PreparedStudies {
    StudyTable table;
    TransformKind kind;
    WeightRule rule;
};

// Applies the dof policy for transforms/weights that require nu2 > 4.
PreparedStudies prepare(const CommonOptions& opt, bool needs_weights = true) {
    PreparedStudies prep;
    prep.table = ingest(opt.input);
    prep.kind = *parse_transform(opt.transform);
    prep.rule = opt.weights == "equal" ? WeightRule::equal : WeightRule::inverse_sqrt_c1;

    const auto needs_policy = [&](const StudyF& st) {
        return !supports(prep.kind, st.dist()) ||
               (needs_weights && prep.rule == WeightRule::inverse_sqrt_c1 &&
                st.n2 - 1 <= 4);
    };
    std::vector<std::string> unsupported;
    for (std::size_t i = 0; i < prep.table.size(); ++i)
        if (needs_policy(prep.table.studies[i])) unsupported.push_back(prep.table.ids[i]);
    if (unsupported.empty()) return prep;

    std::string joined;
    for (const auto& id : unsupported) joined += (joined.empty() ? "" : ", ") + id;
    if (opt.dof_policy == "error")
        throw std::runtime_error("studies with denominator dof <= 4 are not supported "
                                 "by the requested transform/weights: " + joined +
                                 " (use --dof-policy drop or fallback)");
    if (opt.dof_policy == "drop") {
        std::cerr << "warning: dropping studies with too-small denominator dof: "
                  << joined << "\n";
        StudyTable kept;
        for (std::size_t i = 0; i < prep.table.size(); ++i) {
            if (needs_policy(prep.table.studies[i])) continue;
            kept.ids.push_back(prep.table.ids[i]);
            kept.studies.push_back(prep.table.studies[i]);
            kept.summaries.push_back(prep.table.summaries[i]);
        }
        if (kept.studies.empty())
            throw std::runtime_error("no studies left after dropping unsupported ones");
        prep.table = std::move(kept);
        return prep;
    }
    // fallback: T3 handles every dof; equal weights avoid the c1 constants
    std::cerr << "warning: switching to T3 with equal weights for studies: " << joined
              << "\n";
    prep.kind = TransformKind::t3;
    prep.rule = WeightRule::equal;
    return prep;
}

ZVector z_scores(const StudyTable& table, TransformKind kind) {
    ZVector zs;
    for (const auto& st : table.studies) {
        zs.z.push_back(transform(kind, st.s, 1.0, st.dist()));
        zs.kinds.push_back(kind);
        zs.dofs.push_back(st.dist());
    }
    return zs;
}

void write_svg(const std::string& dir, const std::string& name,
               const std::string& content) {
    std::filesystem::create_directories(dir);
    const auto path = std::filesystem::path(dir) / name;
    std::ofstream out(path);
    if (!out)
        throw std::runtime_error("cannot write " + path.string());
    out << content;
}

int run_analyze(const CommonOptions& opt, const std::string& model,
                const std::string& re_critical, const std::string& statistic) {
    const auto prep = prepare(opt);
    const auto& table = prep.table;
    const Seed seed = effective_seed(opt);

    AnalysisReport report;
    report.ids = table.ids;
    for (std::size_t i = 0; i < table.size(); ++i)
        report.studies.push_back(study_f_test(table.studies[i], opt.alpha, table.ids[i]));

    const auto zs = z_scores(table, prep.kind);
    const auto w = weights_for(table.studies, prep.rule);
    report.omnibus = {z_mean_test(zs), x2_sum_test(zs), z_weighted_test(zs, w),
                      x2_weighted_test(zs, w, opt.mc_replicates, seed)};

    if (model == "pivot")
        report.estimate = vst_pivot_estimate(table.studies, w, opt.alpha);
    else if (model == "fe-normal")
        report.estimate = normal_fe_mle(table.studies, opt.alpha);
    else if (model == "fe-f")
        report.estimate = f_density_fe_mle(table.studies, opt.alpha);
    else
        report.estimate = normal_re_mle(table.studies, opt.alpha,
                                        re_critical == "z" ? CriticalValue::normal
                                                           : CriticalValue::student_t);

    report.qq = qq_data(table.studies, prep.kind);
    const auto stat = statistic == "x2w" ? OmnibusStatistic::x2w : OmnibusStatistic::zw;
    report.incremental = incremental_pvalues(table.studies, prep.kind, prep.rule, stat,
                                             opt.mc_replicates, seed);

    report.config = json{{"input", opt.input},
                         {"transform", name(prep.kind)},
                         {"model", model},
                         {"re_critical", re_critical},
                         {"alpha", opt.alpha},
                         {"mc_replicates", opt.mc_replicates},
                         {"seed", seed.value},
                         {"weights", name(prep.rule)},
                         {"incremental_statistic", statistic}};

    std::cout << to_json(report).dump(2) << "\n";
    if (!opt.svg_dir.empty()) {
        write_svg(opt.svg_dir, "qq.svg", svg::render(report.qq));
        write_svg(opt.svg_dir, "forest.svg", svg::render(report.studies, &report.estimate));
        write_svg(opt.svg_dir, "incremental.svg", svg::render(report.incremental));
    }
    return 0;
}

int run_test(const CommonOptions& opt, const std::string& tail_name) {
    const auto prep = prepare(opt);
    const auto zs = z_scores(prep.table, prep.kind);
    const auto w = weights_for(prep.table.studies, prep.rule);
    const Tail tail = tail_name == "upper"   ? Tail::upper
                      : tail_name == "lower" ? Tail::lower
                                             : Tail::two_sided;
    json out = json::object();
    out["Z"] = to_json(z_mean_test(zs, tail));
    out["X2"] = to_json(x2_sum_test(zs));
    out["Zw"] = to_json(z_weighted_test(zs, w, tail));
    out["X2w"] = to_json(x2_weighted_test(zs, w, opt.mc_replicates, effective_seed(opt)));
    out["tail"] = tail_name;
    out["transform"] = name(prep.kind);
    std::cout << out.dump(2) << "\n";
    return 0;
}

int run_qq(const CommonOptions& opt) {
    const auto prep = prepare(opt, /*needs_weights=*/false);
    const auto qq = qq_data(prep.table.studies, prep.kind);
    std::cout << to_tsv(qq);
    if (!opt.svg_dir.empty()) write_svg(opt.svg_dir, "qq.svg", svg::render(qq));
    return 0;
}

int run_forest(const CommonOptions& opt) {
    const auto table = ingest(opt.input);
    std::vector<ForestRow> rows;
    for (std::size_t i = 0; i < table.size(); ++i)
        rows.push_back(study_f_test(table.studies[i], opt.alpha, table.ids[i]));
    std::cout << to_tsv(rows);
    if (!opt.svg_dir.empty()) write_svg(opt.svg_dir, "forest.svg", svg::render(rows));
    return 0;
}

int run_incremental(const CommonOptions& opt, const std::string& statistic) {
    const auto prep = prepare(opt);
    const auto stat = statistic == "x2w" ? OmnibusStatistic::x2w : OmnibusStatistic::zw;
    const auto curve = incremental_pvalues(prep.table.studies, prep.kind, prep.rule,
                                           stat, opt.mc_replicates, effective_seed(opt));
    std::cout << to_tsv(curve, prep.table.ids);
    if (!opt.svg_dir.empty())
        write_svg(opt.svg_dir, "incremental.svg", svg::render(curve));
    return 0;
}

std::vector<std::pair<int, int>> parse_arm_sizes(const json& cfg) {
    std::vector<std::pair<int, int>> sizes;
    if (cfg.contains("design") && cfg.at("design") == "bmd") {
        sizes = bmd_arm_sizes();
    } else {
        for (const auto& pair : cfg.at("arm_sizes"))
            sizes.emplace_back(pair.at(0).get<int>(), pair.at(1).get<int>());
    }
    const int repeat = cfg.value("repeat", 1);
    const int multiplier = cfg.value("size_multiplier", 1);
    std::vector<std::pair<int, int>> out;
    for (int r = 0; r < repeat; ++r)
        for (auto [n1, n2] : sizes)
            out.emplace_back(n1 * multiplier, n2 * multiplier);
    return out;
}

int run_one_experiment(const json& cfg, const std::string& svg_dir) {
    const std::string kind = cfg.at("experiment").get<std::string>();
    if (kind == "size_grid") {
        std::vector<double> grid;
        for (const auto& v : cfg.at("nu_grid")) grid.push_back(v.get<double>());
        const auto tk = parse_transform(cfg.value("transform", "T3"));
        if (!tk) throw std::runtime_error("unknown transform in config");
        const auto g = size_grid(*tk, grid, cfg.value("alpha", 0.05),
                                 cfg.value("replicates", 10000),
                                 Seed{cfg.value("seed", std::uint64_t{0})});
        std::cout << "# size_grid transform=" << name(*tk) << " alpha=" << g.alpha
                  << " replicates=" << g.replicates << "\n"
                  << to_tsv(g);
        if (!svg_dir.empty())
            write_svg(svg_dir, std::string("size_grid_") + name(*tk) + ".svg",
                      svg::render(g));
        return 0;
    }
    if (kind == "estimator_table") {
        SimDesign design;
        design.arm_sizes = parse_arm_sizes(cfg);
        design.rho = cfg.value("rho", 1.0);
        design.tau = cfg.value("tau", 0.0);
        design.replicates = cfg.value("replicates", 1000);
        design.alpha = cfg.value("alpha", 0.05);
        design.seed = Seed{cfg.value("seed", std::uint64_t{0})};
        std::vector<MethodTag> methods;
        const auto parse_method = [](const std::string& m) {
            if (m == "T1") return MethodTag::t1;
            if (m == "T3") return MethodTag::t3;
            if (m == "FE") return MethodTag::fe;
            if (m == "RE") return MethodTag::re;
            throw std::runtime_error("unknown method '" + m + "'");
        };
        if (cfg.contains("methods"))
            for (const auto& m : cfg.at("methods"))
                methods.push_back(parse_method(m.get<std::string>()));
        else
            methods = {MethodTag::t1, MethodTag::t3, MethodTag::fe, MethodTag::re};
        const auto table = estimator_table(design, methods);
        std::cout << "# estimator_table rho=" << design.rho << " tau=" << design.tau
                  << " K=" << design.arm_sizes.size()
                  << " replicates=" << design.replicates
                  << " used=" << table.used_replicates
                  << " failed=" << table.failed_replicates << "\n"
                  << to_tsv(table);
        return 0;
    }
    if (kind == "cohens_d") {
        std::vector<int> n1s;
        for (const auto& v : cfg.at("n1")) n1s.push_back(v.get<int>());
        const auto mu = cfg.at("mu");
        const auto sd = cfg.at("sd");
        const auto rows = cohens_d_table(
            n1s, cfg.at("total_n").get<int>(),
            {mu.at(0).get<double>(), mu.at(1).get<double>()},
            {sd.at(0).get<double>(), sd.at(1).get<double>()},
            cfg.value("replicates", 10000), Seed{cfg.value("seed", std::uint64_t{0})});
        std::cout << "# cohens_d total_n=" << cfg.at("total_n").get<int>() << "\n"
                  << to_tsv(rows);
        return 0;
    }
    if (kind == "transform_samples") {
        const auto tk = parse_transform(cfg.value("transform", "T3"));
        if (!tk) throw std::runtime_error("unknown transform in config");
        const auto draws = transform_samples(
            *tk, FDist(cfg.at("nu1").get<double>(), cfg.at("nu2").get<double>()),
            cfg.value("n", 10000), Seed{cfg.value("seed", std::uint64_t{0})});
        std::cout << "# transform_samples transform=" << name(*tk) << "\nz\n";
        for (double z : draws) std::cout << detail::format_g17(z) << "\n";
        return 0;
    }
    throw std::runtime_error("unknown experiment '" + kind + "'");
}

int run_simulate(const std::string& config_path, const std::string& svg_dir) {
    std::ifstream in(config_path);
    if (!in) throw std::runtime_error(config_path + ": cannot open");
    json cfg = json::parse(in);
    if (cfg.is_object() && cfg.contains("experiments")) cfg = cfg.at("experiments");
    if (cfg.is_array()) {
        bool first = true;
        for (const auto& one : cfg) {
            if (!first) std::cout << "\n";
            first = false;
            run_one_experiment(one, svg_dir);
        }
        return 0;
    }
    return run_one_experiment(cfg, svg_dir);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"meta-analysis of ratios of sample variances"};
    app.require_subcommand(1);

    CommonOptions a_opt;
    std::string a_model = "re", a_recrit = "t", a_stat = "zw";
    auto* analyze = app.add_subcommand("analyze", "full analysis report (JSON)");
    add_common(analyze, a_opt);
    analyze->add_option("--model", a_model, "estimator: pivot, fe-normal, fe-f, re")
        ->check(CLI::IsMember({"pivot", "fe-normal", "fe-f", "re"}));
    analyze->add_option("--re-critical", a_recrit,
                        "critical value for the re interval: t (student) or z (normal)")
        ->check(CLI::IsMember({"t", "z"}));
    analyze->add_option("--statistic", a_stat, "incremental-curve statistic")
        ->check(CLI::IsMember({"zw", "x2w"}));

    CommonOptions t_opt;
    std::string t_tail = "two-sided";
    auto* test = app.add_subcommand("test", "omnibus tests for unequal variances (JSON)");
    add_common(test, t_opt);
    test->add_option("--tail", t_tail, "sidedness of the Z-type tests")
        ->check(CLI::IsMember({"two-sided", "upper", "lower"}));

    CommonOptions q_opt;
    auto* qq = app.add_subcommand("qq", "Q-Q plot data (TSV)");
    add_common(qq, q_opt, false);

    CommonOptions f_opt;
    auto* forest = app.add_subcommand("forest", "per-study F-test rows (TSV)");
    forest->add_option("-i,--input", f_opt.input, "study table (csv/tsv)")->required();
    forest->add_option("-a,--alpha", f_opt.alpha, "two-sided level")
        ->check(CLI::Range(1e-6, 0.999999));
    forest->add_option("--svg", f_opt.svg_dir, "directory for SVG plot output");

    CommonOptions i_opt;
    std::string i_stat = "zw";
    auto* incremental =
        app.add_subcommand("incremental", "incremental-inclusion p-value curve (TSV)");
    add_common(incremental, i_opt);
    incremental->add_option("--statistic", i_stat, "omnibus statistic: zw or x2w")
        ->check(CLI::IsMember({"zw", "x2w"}));

    std::string sim_config, sim_svg;
    auto* simulate = app.add_subcommand("simulate", "seeded simulation experiments (TSV)");
    simulate->add_option("-c,--config", sim_config, "declarative JSON config")->required();
    simulate->add_option("--svg", sim_svg, "directory for SVG plot output");

    CLI11_PARSE(app, argc, argv);

    try {
        if (analyze->parsed()) return run_analyze(a_opt, a_model, a_recrit, a_stat);
        if (test->parsed()) return run_test(t_opt, t_tail);
        if (qq->parsed()) return run_qq(q_opt);
        if (forest->parsed()) return run_forest(f_opt);
        if (incremental->parsed()) return run_incremental(i_opt, i_stat);
        if (simulate->parsed()) return run_simulate(sim_config, sim_svg);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
