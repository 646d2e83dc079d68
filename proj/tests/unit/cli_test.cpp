#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "covlab/cli.hpp"

using namespace covlab;
using namespace covlab::cli;

namespace {

std::filesystem::path scratch(const std::string& name)
{
    const auto dir = std::filesystem::temp_directory_path() / "covlab_cli_test";
    std::filesystem::create_directories(dir);
    return dir / name;
}

std::string write_text(const std::string& name, const std::string& text)
{
    const auto p = scratch(name);
    std::ofstream(p) << text;
    return p.string();
}

std::string read_text(const std::string& path)
{
    std::ifstream in(path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// y = 2x + noise-free wobble, with two labeled groups.
std::string training_csv(bool labels)
{
    std::string s = labels ? "x1,y,label\n" : "x1,y\n";
    for (int i = 0; i < 80; ++i) {
        const double x = i / 80.0;
        const double y = 2 * x + ((i * 37) % 11 - 5) / 10.0 * (x < 0.5 ? 1.0 : 3.0);
        s += std::to_string(x) + "," + std::to_string(y);
        if (labels) s += x < 0.5 ? ",0" : ",1";
        s += "\n";
    }
    return s;
}

int run_main(std::vector<std::string> args)
{
    args.insert(args.begin(), "coverage_lab");
    std::vector<char*> argv;
    for (auto& a : args) argv.push_back(a.data());
    return cli::main(static_cast<int>(argv.size()), argv.data());
}

}  // namespace

TEST_SUITE("cli")
{
    TEST_CASE("dotted overrides")
    {
        Json root = Json::object();
        apply_assignment(root, "family.noise.scale=2.5");
        apply_assignment(root, "method.kind=thinned");
        apply_assignment(root, "trials=7");
        CHECK(root["family"]["noise"]["scale"] == 2.5);
        CHECK(root["method"]["kind"] == "thinned");
        CHECK(root["trials"] == 7);
        CHECK_THROWS_AS(apply_assignment(root, "novalue"), ConfigError);
        CHECK_THROWS_AS(apply_assignment(root, "trials.x=1"), ConfigError);
    }

    TEST_CASE("unknown keys and bad types are rejected")
    {
        CHECK_THROWS_AS((run_command("simulate", Json{{"trials", 5}, {"tirals", 5}})), ConfigError);
        CHECK_THROWS_AS((run_command("simulate", Json{{"family", {{"noise", {{"shape", 1}}}}}})), ConfigError);
        CHECK_THROWS_AS((run_command("simulate", Json{{"trials", -3}})), ConfigError);
        CHECK_THROWS_AS((run_command("simulate", Json{{"alpha", "high"}})), ConfigError);
        CHECK_THROWS_AS(run_command("nonsense", Json::object()), ConfigError);
        try {
            run_command("bound", Json{{"alpah", 0.1}});
            FAIL("expected ConfigError");
        } catch (const ConfigError& e) {
            CHECK(std::string(e.what()).find("alpah") != std::string::npos);
        }
    }

    TEST_CASE("simulate reports resolved config and checks")
    {
        const Json cfg{{"trials", 1}, {"n0", 30}, {"n1", 30}, {"seed", 3}, {"workers", 1}};
        const auto r = run_command("simulate", cfg);
        CHECK(r.exit_code == kExitOk);
        CHECK(r.report["command"] == "simulate");
        CHECK(r.report["config"]["alpha"] == 0.1);
        CHECK(r.report["config"]["method"]["kind"] == "split-marginal");
        CHECK(r.report["report"]["all_checks_passed"] == true);
        CHECK(r.report["report"]["marginal_coverage"]["trials"] == 1);

        const auto again = run_command("simulate", cfg);
        CHECK(dump_json(r.report) == dump_json(again.report));
    }

    TEST_CASE("simulate conditional with partition cells")
    {
        const Json cfg = Json::parse(R"({
            "experiment": "conditional", "trials": 20, "n0": 50, "n1": 200, "workers": 1, "mass_draws": 5000,
            "alpha": 0.1, "delta": 0.2,
            "method": {"kind": "restricted", "set_class": {"kind": "finite-partition", "partition": {"kind": "grid", "cuts": [0.5]}}},
            "probe_sets": "cells", "keep_trial_records": true
        })");
        const auto r = run_command("simulate", cfg);
        CHECK(r.report["report"]["probes"].size() == 2);
        CHECK(r.report["report"]["probes"][0]["id"] == "cell-0");
    }

    TEST_CASE("bound command")
    {
        const auto g = run_command("bound", Json::parse(R"({"alpha": 0.05, "delta": 1.0, "workers": 1})"));
        CHECK(g.report["hardness_lower_bound"]["value"].get<double>() <= 3.91993 + 1e-5);
        CHECK(g.report["marginal_optimal_length"].get<double>() == doctest::Approx(3.91993).epsilon(1e-5));

        const auto u = run_command("bound", Json::parse(R"({"family": {"noise": {"kind": "uniform"}}, "workers": 1})"));
        for (const auto& row : u.report["curve"]) CHECK(row["objective"].is_number());

        const auto half = run_command("bound", Json::parse(R"({"alpha": 0.5, "delta": 0.5, "samples": 21, "workers": 1})"));
        double last = kInf;
        for (const auto& row : half.report["curve"]) {
            const double len = parse_extended_real(row["optimal_length"]);
            CHECK(len <= last);
            last = len;
        }
        CHECK(half.report["curve"][0]["optimal_length"] == "inf");
    }

    TEST_CASE("vc-check command")
    {
        const auto r = run_command("vc-check", Json::parse(R"({
            "dimension": 2, "set_class": {"kind": "l2-balls"}, "sets_per_m": 30, "workers": 1,
            "points": [[0, 0], [1, 0], [0, 1]], "expect_vc_lower": 3})"));
        CHECK(r.exit_code == kExitOk);
        CHECK(r.report["vc_lower"] == 3);
        CHECK(r.report["points_shattered"] == true);
        CHECK(r.report["points_induced_subsets"] == 8);

        const auto wrong = run_command("vc-check", Json::parse(R"({
            "dimension": 1, "set_class": {"kind": "intervals-1d"}, "sets_per_m": 30, "workers": 1, "expect_vc_lower": 3})"));
        CHECK(wrong.exit_code == kExitAssertion);
    }

    TEST_CASE("fit-predict marginal gives equal widths")
    {
        const auto train = write_text("train.csv", training_csv(false));
        const auto query = write_text("query.csv", "x1\n0.1\n0.4\n0.9\n");
        const auto r = run_command("fit-predict", Json{{"train", train}, {"query", query}, {"workers", 1}});
        const auto& qs = r.report["queries"];
        REQUIRE(qs.size() == 3);
        CHECK(r.report["n0"] == 40);
        CHECK(r.report["n1"] == 40);
        for (const auto& q : qs) CHECK(q["half_width"] == qs[0]["half_width"]);
        CHECK(qs[0]["half_width"] == r.report["quantile"]);
    }

    TEST_CASE("fit-predict restricted partition widths depend only on the cell")
    {
        const auto train = write_text("train_labels.csv", training_csv(true));
        const auto query = write_text("query_labels.csv", "x1,label\n0.1,0\n0.3,0\n0.7,1\n0.95,1\n");
        const Json cfg{{"train", train},
                       {"query", query},
                       {"workers", 1},
                       {"alpha", 0.2},
                       {"delta", 0.3},
                       {"split_mode", "first-rows"},
                       {"method",
                        {{"kind", "restricted"}, {"set_class", {{"kind", "finite-partition"}, {"partition", {{"kind", "labels"}}}}}}}};
        const auto r = run_command("fit-predict", cfg);
        const auto& qs = r.report["queries"];
        REQUIRE(qs.size() == 4);
        CHECK(qs[0]["half_width"] == qs[1]["half_width"]);
        CHECK(qs[2]["half_width"] == qs[3]["half_width"]);
        CHECK(qs[0]["achieving"].contains("calib_indices"));
        CHECK(r.report.contains("eligibility_threshold"));
    }

    TEST_CASE("fit-predict reports malformed rows")
    {
        const auto train = write_text("bad.csv", "x1,y\n0.1,1\n0.2,2,9\n");
        const auto query = write_text("q.csv", "x1\n0.5\n");
        try {
            run_command("fit-predict", Json{{"train", train}, {"query", query}, {"workers", 1}});
            FAIL("expected ParseError");
        } catch (const ParseError& e) {
            CHECK(e.line() == 3);
        }
        const auto wide = write_text("wide.csv", "x1,x2\n0.5,0.5\n");
        CHECK_THROWS_AS(
            run_command("fit-predict", Json{{"train", write_text("ok.csv", training_csv(false))}, {"query", wide}, {"workers", 1}}),
            InputError);
    }

    TEST_CASE("main maps outcomes to exit codes")
    {
        const auto out = scratch("out.json").string();
        const auto cfg = write_text("cfg.json", R"({"trials": 2, "n0": 20, "n1": 20})");
        CHECK(run_main({"simulate", "--config", cfg, "--seed", "5", "--workers", "1", "--out", out}) == kExitOk);
        const auto first = read_text(out);
        CHECK(Json::parse(first)["config"]["seed"] == 5);
        CHECK(run_main({"simulate", "--config", cfg, "--seed", "5", "--workers", "1", "--out", out}) == kExitOk);
        CHECK(read_text(out) == first);

        CHECK(run_main({"simulate", "--config", cfg, "--set", "bogus=1", "--out", out}) == kExitConfig);
        CHECK(run_main({"simulate", "--config", scratch("missing.json").string(), "--out", out}) == kExitConfig);
        CHECK(run_main({"simulate", "--frobnicate"}) == kExitConfig);
        const auto broken = write_text("broken.json", "{ not json");
        CHECK(run_main({"bound", "--config", broken, "--out", out}) == kExitConfig);
        CHECK(run_main({"vc-check", "--set", "set_class.kind=intervals-1d", "--set", "expect_vc_lower=5", "--set",
                        "sets_per_m=10", "--out", out}) == kExitAssertion);
    }
}
