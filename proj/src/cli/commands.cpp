#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "covlab/cli.hpp"
#include "covlab/marginal_conformal.hpp"
#include "covlab/parallel.hpp"
#include "covlab/restricted_conformal.hpp"
#include "covlab/rng.hpp"

namespace covlab::cli {

namespace {

Json point_json(const Eigen::VectorXd& x)
{
    Json a = Json::array();
    for (Eigen::Index i = 0; i < x.size(); ++i) a.push_back(x(i));
    return a;
}

// Keys shared by every command.
struct Common {
    unsigned workers = 1;
    std::optional<std::string> out;
};

Common read_common(ConfigNode& root)
{
    Common c;
    c.workers = root.get<unsigned>("workers", default_workers());
    if (c.workers < 1) throw ConfigError("workers must be >= 1");
    const auto out = root.get<std::string>("out", "");
    if (!out.empty()) c.out = out;
    return c;
}

Json envelope(const std::string& command, const ConfigNode& root)
{
    return Json{{"command", command}, {"config", root.resolved()}};
}

CommandResult cmd_simulate(const Json& config)
{
    ConfigNode root(config, "");
    const auto experiment = root.get<std::string>("experiment", "marginal");
    if (experiment != "marginal" && experiment != "conditional" && experiment != "efficiency")
        throw ConfigError("experiment must be marginal, conditional or efficiency");
    ExperimentConfig cfg = parse_experiment(root);
    const Common common = read_common(root);
    cfg.workers = common.workers;
    const auto csv_path = root.get<std::string>("records_csv", "");
    if (!csv_path.empty()) cfg.keep_trial_records = true;
    root.finish();

    CoverageReport report;
    if (experiment == "marginal") report = run_marginal_experiment(cfg);
    else if (experiment == "conditional") report = run_conditional_experiment(cfg);
    else report = run_efficiency_experiment(cfg);

    CommandResult result;
    result.report = envelope("simulate", root);
    result.report["report"] = to_json(report);
    result.exit_code = report.all_checks_passed() ? kExitOk : kExitAssertion;
    result.out_path = common.out;
    if (!csv_path.empty()) {
        result.csv_path = csv_path;
        result.csv = format_records_csv(report);
    }
    return result;
}

CommandResult cmd_bound(const Json& config)
{
    ConfigNode root(config, "");
    auto fam_node = root.child("family");
    const LocationFamily fam = parse_family(fam_node);
    root.adopt("family", fam_node);
    CoverageSpec spec{root.get<double>("alpha", 0.05), root.get<double>("delta", 0.1)};
    spec.validate();
    const auto samples = root.get<std::size_t>("samples", 101);
    if (samples < 2) throw ConfigError("samples must be >= 2");
    root.get<std::uint64_t>("seed", 0);
    const Common common = read_common(root);
    root.finish();

    Json curve = Json::array();
    for (std::size_t i = 0; i < samples; ++i) {
        const double c = static_cast<double>(i) / static_cast<double>(samples - 1);
        const double level = 1.0 - c * spec.alpha * spec.delta;
        curve.push_back(Json{{"c", c},
                             {"level", level},
                             {"optimal_length", extended_real(optimal_length(fam, level))},
                             {"objective", extended_real(hardness_objective(fam, spec, c))}});
    }
    CommandResult result;
    result.report = envelope("bound", root);
    result.report["hardness_lower_bound"] = to_json(hardness_lower_bound(fam, spec));
    result.report["oracle_noise_quantile"] = extended_real(oracle_noise_quantile(fam.noise, spec.alpha));
    result.report["marginal_optimal_length"] = extended_real(optimal_length(fam, 1.0 - spec.alpha));
    result.report["naive_optimal_length"] = extended_real(optimal_length(fam, 1.0 - spec.alpha * spec.delta));
    result.report["curve"] = curve;
    result.out_path = common.out;
    return result;
}

CommandResult cmd_vc_check(const Json& config)
{
    ConfigNode root(config, "");
    const auto d = root.get<std::size_t>("dimension", 1);
    if (d < 1) throw ConfigError("dimension must be >= 1");
    auto cls_node = root.child("set_class");
    const SetClass cls = parse_set_class(cls_node, d);
    root.adopt("set_class", cls_node);
    const auto max_m = root.get<std::size_t>("max_m", d + 2);
    const auto sets_per_m = root.get<std::size_t>("sets_per_m", 200);
    const auto seed = root.get<std::uint64_t>("seed", 0);
    std::vector<Eigen::VectorXd> points;
    if (const Json* pts = root.raw("points")) {
        if (!pts->is_array()) throw ConfigError("points must be an array of points");
        for (std::size_t i = 0; i < pts->size(); ++i)
            points.push_back(parse_point((*pts)[i], d, "points[" + std::to_string(i) + "]"));
        root.store("points", *pts);
    }
    const auto expect = root.get_optional_count("expect_vc_lower");
    const Common common = read_common(root);
    root.finish();

    const VcEstimate est = vc_estimate(cls, max_m, sets_per_m, seed);
    CommandResult result;
    result.report = envelope("vc-check", root);
    result.report["vc_lower"] = est.vc_lower;
    result.report["nominal_vc"] = nominal_vc(cls);
    result.report["exact_enumeration"] = cls.exact_enumeration();
    Json fractions = Json::array();
    for (std::size_t m = 1; m <= est.shatter_fraction.size(); ++m)
        fractions.push_back(Json{{"m", m}, {"shatter_fraction", est.shatter_fraction[m - 1]}});
    result.report["shatter_fractions"] = fractions;
    if (!points.empty()) {
        Eigen::MatrixXd mat(static_cast<Eigen::Index>(points.size()), static_cast<Eigen::Index>(d));
        for (std::size_t i = 0; i < points.size(); ++i) mat.row(static_cast<Eigen::Index>(i)) = points[i].transpose();
        const auto family = induced_subsets(cls, mat);
        result.report["points_induced_subsets"] = family.subsets.size();
        result.report["points_shattered"] = shatters(cls, mat);
    }
    if (expect) {
        const bool ok = *expect == est.vc_lower;
        result.report["expectation_met"] = ok;
        if (!ok) result.exit_code = kExitAssertion;
    }
    result.out_path = common.out;
    return result;
}

std::vector<Eigen::VectorXd> default_probe_points(const LocationFamily& fam)
{
    std::vector<Eigen::VectorXd> out;
    const auto d = static_cast<Eigen::Index>(fam.features.dimension);
    for (int i = 0; i < 5; ++i) {
        const double u = (i + 0.5) / 5.0;
        const double v = fam.features.law == FeatureLaw::uniform_box
                             ? fam.features.low + u * (fam.features.high - fam.features.low)
                             : -1.5 + 0.75 * i;
        out.push_back(Eigen::VectorXd::Constant(d, v));
    }
    return out;
}

CommandResult cmd_sandwich(const Json& config)
{
    ConfigNode root(config, "");
    ExperimentConfig cfg = parse_experiment(root, 20);
    if (cfg.method.kind != MethodKind::restricted) throw ConfigError("sandwich needs method.kind = restricted");
    const std::size_t d = cfg.family.features.dimension;

    std::vector<SandwichConstants> constants;
    Json constants_resolved = Json::array();
    if (const Json* cs = root.raw("constants")) {
        if (!cs->is_array()) throw ConfigError("constants must be an array of [c_alpha, c_delta] pairs");
        for (const auto& pair : *cs) {
            if (!pair.is_array() || pair.size() != 2 || !pair[0].is_number() || !pair[1].is_number())
                throw ConfigError("constants must be an array of [c_alpha, c_delta] pairs");
            constants.push_back({pair[0].get<double>(), pair[1].get<double>()});
        }
    } else {
        constants = {{0.0, 0.0}, {1.0, 1.0}};
    }
    for (const auto& c : constants) constants_resolved.push_back(Json::array({c.c_alpha, c.c_delta}));
    root.store("constants", constants_resolved);

    std::vector<Eigen::VectorXd> points;
    if (const Json* pts = root.raw("probe_points")) {
        if (!pts->is_array()) throw ConfigError("probe_points must be an array of points");
        for (std::size_t i = 0; i < pts->size(); ++i)
            points.push_back(parse_point((*pts)[i], d, "probe_points[" + std::to_string(i) + "]"));
    } else {
        points = default_probe_points(cfg.family);
    }
    Json points_resolved = Json::array();
    for (const auto& x : points) points_resolved.push_back(point_json(x));
    root.store("probe_points", points_resolved);

    const auto vc = root.get<std::size_t>("vc", nominal_vc(*cfg.method.set_class));
    const auto oracle_draws = root.get<std::size_t>("oracle_draws", 20'000);
    const Common common = read_common(root);
    cfg.workers = common.workers;
    root.finish();

    const SandwichReport report = run_sandwich_check(cfg, constants, points, vc, oracle_draws);
    CommandResult result;
    result.report = envelope("sandwich", root);
    result.report["report"] = to_json(report);
    result.out_path = common.out;
    return result;
}

CommandResult cmd_fit_predict(const Json& config)
{
    ConfigNode root(config, "");
    const auto train_path = root.require<std::string>("train");
    const auto query_path = root.require<std::string>("query");
    const Dataset data = read_dataset_csv(train_path, true);
    const Dataset queries = read_dataset_csv(query_path, false);
    if (queries.dimension() != data.dimension())
        throw InputError("query CSV has " + std::to_string(queries.dimension()) + " feature columns, training CSV has " +
                         std::to_string(data.dimension()));

    SplitConfig split;
    split.n0 = root.get<std::size_t>("n0", data.size() / 2);
    split.n1 = root.get<std::size_t>("n1", data.size() - split.n0);
    split.seed = root.get<std::uint64_t>("seed", 0);
    const auto mode = root.get<std::string>("split_mode", "seeded-random");
    if (mode == "seeded-random") split.mode = SplitMode::seeded_random;
    else if (mode == "first-rows") split.mode = SplitMode::first_rows;
    else throw ConfigError("split_mode must be seeded-random or first-rows");
    CoverageSpec spec{root.get<double>("alpha", 0.1), root.get<double>("delta", 0.1)};
    spec.validate();

    std::shared_ptr<const Partition> labels;
    if (data.labels()) {
        labels = Partition::from_labels(data);
        if (queries.labels()) labels = Partition::extend(*labels, queries);
    }
    auto method_node = root.child("method");
    const MethodSpec method = parse_method(method_node, data.dimension(), labels);
    root.adopt("method", method_node);
    auto reg_node = root.child("regressor");
    const RegressorOptions reg = parse_regressor(reg_node);
    root.adopt("regressor", reg_node);
    const Common common = read_common(root);
    root.finish();

    const SplitResult parts = split_dataset(data, split);
    const RegressionModel model = fit_regressor(reg, parts.train);
    const ResidualSet residuals = calib_residuals(model, parts.calib);

    CommandResult result;
    result.report = envelope("fit-predict", root);
    std::optional<double> q;
    ThinningRule rule{method.c, spec.alpha, stream_seed(split.seed, {tag(StreamTag::thinning)})};
    switch (method.kind) {
    case MethodKind::split_marginal: q = marginal_quantile(residuals, spec.alpha); break;
    case MethodKind::naive_alpha_delta: q = marginal_quantile(residuals, naive_approx_cc_level(spec)); break;
    case MethodKind::thinned:
        rule.validate();
        q = marginal_quantile(residuals, thinning_base_miscoverage(spec, method.c));
        result.report["keep_probability"] = rule.keep_probability();
        break;
    default: break;
    }
    if (q) result.report["quantile"] = extended_real(*q);
    if (method.kind == MethodKind::restricted)
        result.report["eligibility_threshold"] = eligibility_threshold(parts.calib.size(), spec.delta).value;

    Json records = Json::array();
    for (std::size_t i = 0; i < queries.size(); ++i) {
        const Eigen::VectorXd x = queries.row(i);
        Json rec{{"index", i}, {"x", point_json(x)}, {"prediction", model.predict(x)}};
        PredictionInterval interval;
        double half = kInf;
        switch (method.kind) {
        case MethodKind::split_marginal:
        case MethodKind::naive_alpha_delta:
            interval = predict_marginal(model, *q, x);
            half = *q;
            break;
        case MethodKind::thinned: {
            const bool keep = thinning_keeps(rule, i);
            rec["kept"] = keep;
            interval = keep ? predict_marginal(model, *q, x) : PredictionInterval::empty();
            half = keep ? *q : 0.0;
            break;
        }
        case MethodKind::restricted: {
            const auto width = local_width(x, parts.calib, residuals, *method.set_class, spec);
            interval = predict_restricted(model, width, x);
            half = width.width;
            rec["achieving"] = Json{{"set", to_json(width.achieving.witness)},
                                    {"calib_indices", width.achieving.indices},
                                    {"eligible_sets", width.eligible_sets},
                                    {"exact", width.exact}};
            break;
        }
        case MethodKind::always_full: interval = PredictionInterval::whole_line(); break;
        case MethodKind::always_empty:
            interval = PredictionInterval::empty();
            half = 0.0;
            break;
        }
        rec["lower"] = interval.is_empty() ? Json(nullptr) : extended_real(interval.lower());
        rec["upper"] = interval.is_empty() ? Json(nullptr) : extended_real(interval.upper());
        rec["half_width"] = extended_real(half);
        rec["width"] = extended_real(interval_length(interval));
        records.push_back(rec);
    }
    result.report["n0"] = parts.train.size();
    result.report["n1"] = parts.calib.size();
    result.report["queries"] = records;
    result.out_path = common.out;
    return result;
}

void write_file(const std::string& path, const std::string& text)
{
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError("cannot open " + path + " for writing");
    out << text;
    if (!out) throw InputError("failed writing " + path);
}

}  // namespace

CommandResult run_command(const std::string& command, const Json& config)
{
    if (command == "simulate") return cmd_simulate(config);
    if (command == "fit-predict") return cmd_fit_predict(config);
    if (command == "bound") return cmd_bound(config);
    if (command == "vc-check") return cmd_vc_check(config);
    if (command == "sandwich") return cmd_sandwich(config);
    throw ConfigError("unknown command: " + command);
}

int main(int argc, char** argv)
{
    CLI::App app{"coverage_lab: split conformal prediction with approximate conditional coverage"};
    app.require_subcommand(1);
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<unsigned> workers;
    std::string out_path;
    std::vector<std::string> assignments;
    const std::pair<const char*, const char*> commands[] = {
        {"fit-predict", "Fit on a training CSV and emit prediction intervals for a query CSV"},
        {"simulate", "Monte Carlo coverage and efficiency experiment"},
        {"bound", "Hardness lower bound and optimal-length curve for a location family"},
        {"vc-check", "Shattering and VC dimension estimates for a set class"},
        {"sandwich", "Fraction of restricted intervals sandwiched between perturbed oracle intervals"},
    };
    for (const auto& [name, help] : commands) {
        auto* sub = app.add_subcommand(name, help);
        sub->add_option("--config", config_path, "JSON config file");
        sub->add_option("--seed", seed, "Seed");
        sub->add_option("--workers", workers, "Worker threads (default: COVERAGE_LAB_WORKERS or core count)");
        sub->add_option("--out", out_path, "Output path (default: stdout)");
        sub->add_option("--set", assignments, "Override KEY=VALUE with a dotted key; repeatable")->take_all();
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::Success& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitConfig;
    }
    const std::string command = app.get_subcommands().front()->get_name();

    try {
        Json config = Json::object();
        if (!config_path.empty()) {
            std::ifstream in(config_path);
            if (!in) throw ConfigError("cannot open config " + config_path);
            std::stringstream buf;
            buf << in.rdbuf();
            try {
                config = Json::parse(buf.str());
            } catch (const nlohmann::json::parse_error& e) {
                throw ConfigError("config " + config_path + " is not valid JSON: " + e.what());
            }
        }
        if (!config.is_object()) throw ConfigError("config must be a JSON object");
        for (const auto& a : assignments) apply_assignment(config, a);
        if (seed) config["seed"] = *seed;
        if (workers) config["workers"] = *workers;
        if (!out_path.empty()) config["out"] = out_path;

        const CommandResult result = run_command(command, config);
        const std::string text = dump_json(result.report);
        if (result.out_path) write_file(*result.out_path, text);
        else std::cout << text;
        if (result.csv_path) write_file(*result.csv_path, result.csv);
        if (result.exit_code == kExitAssertion) std::cerr << "coverage_lab: assertion checks failed\n";
        return result.exit_code;
    } catch (const std::exception& e) {
        std::cerr << "coverage_lab: " << e.what() << '\n';
    }
    return kExitConfig;
}

}  // namespace covlab::cli
