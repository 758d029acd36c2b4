#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "otafl/harness.hpp"

using namespace otafl;
namespace fs = std::filesystem;

namespace {

harness::ExperimentConfig small_config() {
    auto cfg = harness::default_config();
    cfg.n_users = 4;
    cfg.realizations = 1;
    cfg.methods = {fedsim::Method::kSelectAll};
    cfg.channel.n_antennas = 2;
    cfg.data.samples_per_user = 25;
    cfg.data.n_classes = 3;
    cfg.data.n_features = 5;
    cfg.data.test_samples = 100;
    cfg.train.rounds = 2;
    return cfg;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

TEST_CASE("dbm conversion") {
    CHECK(harness::dbm_to_mw(0.0) == doctest::Approx(1.0));
    CHECK(harness::dbm_to_mw(-20.0) == doctest::Approx(0.01));
    CHECK(harness::dbm_to_mw(10.0) == doctest::Approx(10.0));
}

TEST_CASE("config round trip is lossless") {
    auto cfg = harness::default_config();
    cfg.master_seed = 1234;
    cfg.realizations = 3;
    cfg.methods = {fedsim::Method::kPddFa, fedsim::Method::kRfa};
    cfg.channel.pl_offset_db = 40.25;
    cfg.train.lr = 0.125;
    cfg.train.rfa_redraw_per_round = true;
    cfg.channel.model = channel::ChannelModel::kRayleigh;

    const std::string text = harness::serialize_config(cfg);
    auto parsed = harness::parse_config(text);
    CHECK(harness::serialize_config(parsed) == text);
    CHECK(parsed.master_seed == 1234);
    CHECK(parsed.methods.size() == 2);
    CHECK(parsed.train.lr == doctest::Approx(0.125));
    CHECK(parsed.train.rfa_redraw_per_round);
    CHECK(parsed.channel.model == channel::ChannelModel::kRayleigh);
    // derived linear powers follow the dBm settings
    CHECK(parsed.train.p_a == doctest::Approx(harness::dbm_to_mw(parsed.p_a_dbm)));
    CHECK(parsed.train.sigma_n2 == doctest::Approx(harness::dbm_to_mw(parsed.sigma_n2_dbm)));
}

TEST_CASE("config validation rejects bad input") {
    auto cfg = harness::default_config();
    cfg.methods.clear();
    CHECK_THROWS_AS(harness::validate_config(cfg), std::invalid_argument);

    cfg = harness::default_config();
    cfg.realizations = 0;
    CHECK_THROWS_AS(harness::validate_config(cfg), std::invalid_argument);

    cfg = harness::default_config();
    cfg.dataset = "imagenet";
    CHECK_THROWS_AS(harness::validate_config(cfg), std::invalid_argument);

    CHECK_THROWS_AS(harness::parse_config("[experiment]\nbogus_key = 1\n"),
                    std::invalid_argument);
    CHECK_THROWS_AS(harness::parse_config("no equals sign here"), std::invalid_argument);

    // every key has a default: an empty config parses to the defaults
    auto empty = harness::parse_config("");
    CHECK(empty.n_users == harness::default_config().n_users);
}

TEST_CASE("run_experiment row counts and determinism") {
    auto cfg = small_config();
    auto result = harness::run_experiment(cfg, 1);
    REQUIRE(result.rows.size() == 2);  // one method, one realization, two rounds
    CHECK(result.rows[0].round == 0);
    CHECK(result.rows[1].round == 1);
    CHECK(result.cells.size() == 1);
    CHECK(result.cells[0].ok);

    auto again = harness::run_experiment(cfg, 1);
    CHECK(harness::format_csv(result.rows) == harness::format_csv(again.rows));

    // a different seed changes the outputs
    auto cfg2 = cfg;
    cfg2.master_seed = 77;
    auto other = harness::run_experiment(cfg2, 1);
    CHECK(harness::format_csv(result.rows) != harness::format_csv(other.rows));
}

TEST_CASE("csv format and round trip") {
    harness::ResultRow row;
    row.method = "select_all";
    row.realization = 2;
    row.round = 5;
    row.train_loss = 1.234567891;
    row.test_loss = 0.1;
    row.test_accuracy = 0.75;
    row.selected_count = 4;
    row.r_value = 3.5e-6;
    row.max_gain = 123456.789;

    const std::string csv = harness::format_csv({row});
    const std::string header = csv.substr(0, csv.find('\n'));
    CHECK(header ==
          "method,realization,round,train_loss,test_loss,test_accuracy,selected_count,"
          "r_value,max_gain");

    auto parsed = harness::parse_csv(csv);
    REQUIRE(parsed.size() == 1);
    CHECK(parsed[0].method == row.method);
    CHECK(parsed[0].realization == row.realization);
    CHECK(parsed[0].round == row.round);
    CHECK(parsed[0].train_loss == doctest::Approx(row.train_loss).epsilon(1e-8));
    CHECK(parsed[0].r_value == doctest::Approx(row.r_value).epsilon(1e-8));
    // serialization identity: parsed rows re-emit byte-for-byte
    CHECK(harness::format_csv(parsed) == csv);

    // empty rows: header-only file
    CHECK(harness::format_csv({}) == header + "\n");

    // nine significant digits with a locale-independent decimal point
    CHECK(csv.find("1.23456789") != std::string::npos);
    CHECK(csv.find(',') != std::string::npos);
    CHECK(csv.find(';') == std::string::npos);
}

TEST_CASE("emit_results writes csv, summary, and traces") {
    auto cfg = small_config();
    cfg.methods = {fedsim::Method::kPddFa, fedsim::Method::kSelectAll};
    auto result = harness::run_experiment(cfg, 1);

    const auto dir = fs::temp_directory_path() / "otafl_harness_test";
    fs::remove_all(dir);
    harness::emit_results(result, cfg, dir.string());

    CHECK(fs::exists(dir / "results.csv"));
    CHECK(fs::exists(dir / "summary.json"));
    CHECK(fs::exists(dir / "trace_pdd_fa_r0.csv"));

    auto parsed = harness::parse_csv(slurp(dir / "results.csv"));
    CHECK(parsed.size() == result.rows.size());
    CHECK(harness::format_csv(parsed) == slurp(dir / "results.csv"));
    for (std::size_t i = 0; i < parsed.size(); ++i) {
        CHECK(parsed[i].method == result.rows[i].method);
        CHECK(parsed[i].test_accuracy ==
              doctest::Approx(result.rows[i].test_accuracy).epsilon(1e-8));
    }

    const std::string summary = slurp(dir / "summary.json");
    CHECK(summary.find("\"pdd_fa\"") != std::string::npos);
    CHECK(summary.find("\"select_all\"") != std::string::npos);
    CHECK(summary.find("final_accuracy_mean") != std::string::npos);
    CHECK(summary.find("not implemented") != std::string::npos);  // DC baseline note

    const std::string trace = slurp(dir / "trace_pdd_fa_r0.csv");
    CHECK(trace.substr(0, trace.find('\n')) ==
          "outer_iter,inner_iter,aug_lagrangian,residual_inf,kappa,r_value");
    fs::remove_all(dir);
}

TEST_CASE("byte-identical results for a fixed master seed") {
    auto cfg = small_config();
    cfg.methods = {fedsim::Method::kPddFa, fedsim::Method::kRfa};
    cfg.realizations = 2;

    const auto dir_a = fs::temp_directory_path() / "otafl_det_a";
    const auto dir_b = fs::temp_directory_path() / "otafl_det_b";
    fs::remove_all(dir_a);
    fs::remove_all(dir_b);
    harness::emit_results(harness::run_experiment(cfg, 1), cfg, dir_a.string());
    harness::emit_results(harness::run_experiment(cfg, 2), cfg, dir_b.string());
    CHECK(slurp(dir_a / "results.csv") == slurp(dir_b / "results.csv"));
    CHECK(slurp(dir_a / "summary.json") == slurp(dir_b / "summary.json"));
    fs::remove_all(dir_a);
    fs::remove_all(dir_b);
}

TEST_CASE("failed cells are recorded and the run continues") {
    auto cfg = small_config();
    cfg.methods = {fedsim::Method::kSelectAll, fedsim::Method::kAps};
    cfg.dataset = "mnist";
    cfg.mnist_dir = "/nonexistent/place";
    auto result = harness::run_experiment(cfg, 1);
    CHECK(result.rows.empty());
    REQUIRE(result.cells.size() == 2);
    for (const auto& cell : result.cells) {
        CHECK_FALSE(cell.ok);
        CHECK_FALSE(cell.error.empty());
    }
    // the summary still mentions both methods, flagged as failed
    const std::string summary = harness::summary_json(result, cfg);
    CHECK(summary.find("select_all") != std::string::npos);
    CHECK(summary.find("aps") != std::string::npos);
    CHECK(summary.find("partial_failure") != std::string::npos);
}
