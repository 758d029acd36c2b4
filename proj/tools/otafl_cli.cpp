#include <CLI11.hpp>
#include <cstdio>
#include <fstream>
#include <iostream>

#include "otafl/harness.hpp"
#include "otafl/oracles.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Over-the-air federated learning simulator and optimizer"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir = "out";
    std::uint64_t seed_override = 0;
    bool seed_set = false;
    int workers = 1;

    auto* run = app.add_subcommand("run", "Run the configured method x realization grid");
    run->add_option("--config", config_path, "Config file (omit for defaults)");
    run->add_option("--out", out_dir, "Output directory")->required();
    run->add_option("--seed", seed_override, "Master seed override")
        ->each([&](const std::string&) { seed_set = true; });
    run->add_option("--workers", workers, "Concurrent cells");

    auto* validate = app.add_subcommand("validate", "Parse and check a config file");
    validate->add_option("--config", config_path, "Config file")->required();

    auto* oracle = app.add_subcommand("oracle-suite",
                                      "Run the derived-value oracle checks and print pass/fail");

    auto* dump = app.add_subcommand("print-config", "Print the default config file");

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed()) {
            otafl::harness::ExperimentConfig cfg = config_path.empty()
                                                       ? otafl::harness::default_config()
                                                       : otafl::harness::load_config(config_path);
            if (seed_set) cfg.master_seed = seed_override;
            otafl::harness::validate_config(cfg);
            auto result = otafl::harness::run_experiment(cfg, workers);
            otafl::harness::emit_results(result, cfg, out_dir);
            int failed = 0;
            for (const auto& cell : result.cells) failed += cell.ok ? 0 : 1;
            std::cout << "wrote " << result.rows.size() << " rows to " << out_dir
                      << " (" << failed << " failed cells)\n";
            for (const auto& cell : result.cells) {
                if (!cell.ok) {
                    std::cout << "  failed: " << cell.method << " r" << cell.realization
                              << ": " << cell.error << "\n";
                }
            }
            return failed == 0 ? 0 : 2;
        }
        if (validate->parsed()) {
            auto cfg = otafl::harness::load_config(config_path);
            otafl::harness::validate_config(cfg);
            std::cout << "config ok\n" << otafl::harness::serialize_config(cfg);
            return 0;
        }
        if (oracle->parsed()) {
            auto results = otafl::oracles::run_all();
            int failed = 0;
            for (const auto& r : results) {
                std::cout << (r.pass ? "PASS" : "FAIL") << "  " << r.name << "  (" << r.detail
                          << ")\n";
                failed += r.pass ? 0 : 1;
            }
            std::cout << (failed == 0 ? "all oracle checks passed\n"
                                      : std::to_string(failed) + " oracle checks failed\n");
            return failed == 0 ? 0 : 1;
        }
        if (dump->parsed()) {
            std::cout << otafl::harness::serialize_config(otafl::harness::default_config());
            return 0;
        }
    } catch (const std::exception& ex) {
        std::cerr << "error: " << ex.what() << "\n";
        return 1;
    }
    return 0;
}
