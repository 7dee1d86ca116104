#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <string>

#include "zq/cli.hpp"
#include "zq/config.hpp"
#include "zq/trace_io.hpp"

using namespace zq;
namespace fs = std::filesystem;

namespace {

fs::path write_temp(const std::string& name, const std::string& text) {
    const fs::path p = fs::temp_directory_path() / name;
    std::ofstream out(p);
    out << text;
    return p;
}

std::string read_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(in), {});
}

} // namespace

TEST_CASE("preset parses to the published parameters") {
    const ExperimentConfig cfg =
        parse_config_text(preset_config_text("reproduce-paper"));
    CHECK(cfg.model.n() == 1);
    CHECK(cfg.model.A()(0, 0) == 1.2);
    CHECK(cfg.scheme.K == 2);
    CHECK(cfg.scheme.g.num == 4);
    CHECK(cfg.scheme.g.den == 3);
    CHECK(cfg.scheme.alpha() == 0.75);
    CHECK(cfg.scheme.L == 9.0);
    CHECK(cfg.scheme.beta == 3.95);
    CHECK(cfg.scheme.eps == 0.95);
    CHECK(cfg.run.N_list.size() == 496); // N in {10, 12, ..., 1000}
    CHECK(cfg.run.N_list.front() == 10);
    CHECK(cfg.run.N_list.back() == 1000);
    CHECK(cfg.run.stop_eps == 1e-4);
    CHECK(cfg.run.settle_T == 10000);
    CHECK(validate_scheme(cfg.scheme_with_N(10), cfg.model).all_pass());
    CHECK_THROWS_AS(preset_config_text("nope"), ConfigError);
}

TEST_CASE("config round-trip is the identity on the typed form") {
    const std::string first = preset_config_text("reproduce-paper");
    const ExperimentConfig cfg = parse_config_text(first);
    const std::string canon = serialize_config(cfg);
    const ExperimentConfig cfg2 = parse_config_text(canon);
    CHECK(serialize_config(cfg2) == canon);
    CHECK(cfg2.scheme.g.num == cfg.scheme.g.num);
    CHECK(cfg2.run.N_list == cfg.run.N_list);
    CHECK(cfg2.model.A()(0, 0) == cfg.model.A()(0, 0));
    CHECK(cfg2.output.out_dir == cfg.output.out_dir);
}

TEST_CASE("strict parsing") {
    // unknown keys rejected
    CHECK_THROWS_WITH_AS(
        parse_config_text(R"({"model": {"n": 1, "A": [[1.2]], "B": [[1]],
            "Q": [[1]], "noise": {"type": "zero"}},
            "scheme": {"K": 2, "g": "4/3", "p": 1, "q_exp": 3, "L": 9.0,
                       "beta": 3.95, "eps": 0.95},
            "run": {}, "typo": 1})"),
        doctest::Contains("unknown key"), ConfigError);
    // odd K is a parse-level rejection
    try {
        parse_config_text(R"({"model": {"n": 1, "A": [[1.2]], "B": [[1]],
            "Q": [[1]], "noise": {"type": "zero"}},
            "scheme": {"K": 3, "g": "4/3", "p": 1, "q_exp": 3, "L": 9.0,
                       "beta": 3.95, "eps": 0.95},
            "run": {}})");
        FAIL("odd K must be rejected");
    } catch (const ConfigError& ex) {
        CHECK(std::string(ex.what()).find("even") != std::string::npos);
    }
    // g must be an exact rational string
    CHECK_THROWS_AS(
        parse_config_text(R"({"model": {"n": 1, "A": [[1.2]], "B": [[1]],
            "Q": [[1]], "noise": {"type": "zero"}},
            "scheme": {"K": 2, "g": 1.3333, "p": 1, "q_exp": 3, "L": 9.0,
                       "beta": 3.95, "eps": 0.95},
            "run": {}})"),
        ConfigError);
    // malformed JSON
    CHECK_THROWS_AS(parse_config_text("{"), ConfigError);
}

TEST_CASE("validation report names Condition 5") {
    const ExperimentConfig cfg =
        parse_config_text(preset_config_text("reproduce-paper"));
    const SchemeParams bad(2, 2, Rational{4, 3}, 1, 3, 0.1, 0, 3.95, 0.95);
    const ValidationReport rep = validate_scheme(bad, cfg.model);
    CHECK_FALSE(rep.all_pass());
    CHECK(rep.render().find("Condition 5") != std::string::npos);
}

TEST_CASE("cli validate exit codes") {
    CHECK(cli::run({"validate", "--preset", "reproduce-paper"}) == 0);

    // Condition 5 violation: exit 1
    std::string bad_l = preset_config_text("reproduce-paper");
    const auto pos = bad_l.find("\"L\": 9.0");
    REQUIRE(pos != std::string::npos);
    bad_l.replace(pos, 8, "\"L\": 0.1");
    const fs::path bad_path = write_temp("zq_bad_l.json", bad_l);
    CHECK(cli::run({"validate", "--config", bad_path.string()}) == 1);

    // parse failure: exit 2
    const fs::path broken = write_temp("zq_broken.json", "{ not json");
    CHECK(cli::run({"validate", "--config", broken.string()}) == 2);
    const fs::path missing = fs::temp_directory_path() / "zq_missing.json";
    CHECK(cli::run({"validate", "--config", missing.string()}) == 2);

    // both --config and --preset: rejected
    CHECK(cli::run({"validate", "--config", bad_path.string(), "--preset",
                    "smoke"}) == 2);
}

TEST_CASE("cli smoke sweep is deterministic byte for byte") {
    const fs::path dir_a = fs::temp_directory_path() / "zq_sweep_a";
    const fs::path dir_b = fs::temp_directory_path() / "zq_sweep_b";
    fs::remove_all(dir_a);
    fs::remove_all(dir_b);
    CHECK(cli::run({"sweep", "--preset", "smoke", "--out-dir", dir_a.string()}) == 0);
    CHECK(cli::run({"sweep", "--preset", "smoke", "--out-dir", dir_b.string()}) == 0);

    const std::string csv_a = read_file(dir_a / "sweep.csv");
    const std::string csv_b = read_file(dir_b / "sweep.csv");
    CHECK(csv_a == csv_b);
    CHECK(csv_a.rfind("N,C_bits,mean_gap,stderr_gap,mean_T_stop,stopped_by_cap_count\n",
                      0) == 0);
    // two data rows for the smoke preset
    CHECK(std::count(csv_a.begin(), csv_a.end(), '\n') == 3);
    CHECK(fs::exists(dir_a / "regression.json"));
    fs::remove_all(dir_a);
    fs::remove_all(dir_b);
}

TEST_CASE("cli trace writes a readable dump and csv") {
    const fs::path dir = fs::temp_directory_path() / "zq_trace_cli";
    fs::remove_all(dir);
    CHECK(cli::run({"trace", "--preset", "reproduce-paper", "--out-dir",
                    dir.string(), "--N", "100", "--T", "5000", "--seed", "5"}) == 0);
    TraceReader reader(dir / "trace.bin");
    CHECK(reader.n() == 1);
    TraceRecord rec;
    int count = 0;
    double min_delta = 1e300;
    while (reader.next(rec)) {
        ++count;
        min_delta = std::min(
            min_delta, 9.0 * std::pow(4.0 / 3.0, rec.delta_exp));
    }
    CHECK(count == 5000);
    CHECK(min_delta >= 0.75 * 9.0 - 1e-12); // Delta >= alpha L throughout
    const std::string csv = read_file(dir / "trace.csv");
    CHECK(csv.rfind("t,x0,delta\n", 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 5001);

    // T = 0: valid header, empty body
    CHECK(cli::run({"trace", "--preset", "reproduce-paper", "--out-dir",
                    dir.string(), "--T", "0"}) == 0);
    TraceReader empty(dir / "trace.bin");
    CHECK_FALSE(empty.next(rec));
    fs::remove_all(dir);
}

TEST_CASE("cli distortion, tailbound and baseline run end to end") {
    const fs::path dir = fs::temp_directory_path() / "zq_cli_misc";
    fs::remove_all(dir);
    CHECK(cli::run({"distortion", "--preset", "smoke", "--out-dir", dir.string(),
                    "--source", "bg", "--samples", "20000"}) == 0);
    CHECK(read_file(dir / "distortion.csv").rfind("N,delta_N,empirical,analytic\n",
                                                  0) == 0);
    CHECK(cli::run({"tailbound", "--preset", "reproduce-paper", "--out-dir",
                    dir.string(), "--episodes", "500", "--k-max", "3"}) == 0);
    CHECK(read_file(dir / "tailbound.csv").rfind("k,empirical,analytic\n", 0) == 0);
    CHECK(cli::run({"baseline", "--preset", "smoke", "--out-dir", dir.string(),
                    "--T", "20000"}) == 0);
    CHECK(read_file(dir / "baseline.csv").rfind("T,empirical,analytic\n", 0) == 0);
    fs::remove_all(dir);
}

TEST_CASE("sweep dumps a sample path when asked") {
    const fs::path dir = fs::temp_directory_path() / "zq_sweep_dump";
    fs::remove_all(dir);
    std::string text = preset_config_text("smoke");
    const auto pos = text.find("\"dump_trajectory\": false");
    REQUIRE(pos != std::string::npos);
    text.replace(pos, 24, "\"dump_trajectory\": true");
    const fs::path cfg_path = write_temp("zq_dump_cfg.json", text);
    CHECK(cli::run({"sweep", "--config", cfg_path.string(), "--out-dir",
                    dir.string()}) == 0);
    TraceReader reader(dir / "sample_path.bin");
    TraceRecord rec;
    std::uint64_t count = 0;
    while (reader.next(rec)) ++count;
    CHECK(count == 10000); // settle_T steps
    CHECK(fs::exists(dir / "sample_path.csv"));
    fs::remove_all(dir);
}

TEST_CASE("seed override changes the stream reproducibly") {
    const fs::path a = fs::temp_directory_path() / "zq_seed_a";
    const fs::path b = fs::temp_directory_path() / "zq_seed_b";
    const fs::path c = fs::temp_directory_path() / "zq_seed_c";
    for (const auto& d : {a, b, c}) fs::remove_all(d);
    CHECK(cli::run({"baseline", "--preset", "smoke", "--seed-override", "42",
                    "--out-dir", a.string(), "--T", "20000"}) == 0);
    CHECK(cli::run({"baseline", "--preset", "smoke", "--seed-override", "43",
                    "--out-dir", b.string(), "--T", "20000"}) == 0);
    CHECK(cli::run({"baseline", "--preset", "smoke", "--seed-override", "42",
                    "--out-dir", c.string(), "--T", "20000"}) == 0);
    CHECK(read_file(a / "baseline.csv") == read_file(c / "baseline.csv"));
    CHECK(read_file(a / "baseline.csv") != read_file(b / "baseline.csv"));
    for (const auto& d : {a, b, c}) fs::remove_all(d);
}

TEST_CASE("cli rejects unknown arguments and commands") {
    CHECK(cli::run({"validate", "--nope"}) == 2);
    CHECK(cli::run({}) == 2);
}
