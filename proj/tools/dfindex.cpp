#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "dfi/cli.hpp"

namespace {

void write_file(const std::filesystem::path& path, const std::string& text)
{
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << text;
}

}  // namespace

int main(int argc, char** argv)
{
    using namespace dfi::cli;
    CLI::App app{"Diederich-Fornaess index estimation on pseudoconvex domains"};
    app.require_subcommand(1);
    app.fallthrough();

    std::string config_path, out_dir, format = "json";
    std::optional<std::uint64_t> seed;
    std::optional<int> samples;
    std::optional<double> eta;
    app.add_option("--config", config_path, "JSON run configuration")->check(CLI::ExistingFile);
    app.add_option("--out", out_dir, "directory for <command>.json and <command>.csv");
    app.add_option("--seed", seed, "overrides the configured seed");
    app.add_option("--samples", samples, "overrides the configured sample count")->check(CLI::PositiveNumber);
    app.add_option("--format", format, "stdout format")->check(CLI::IsMember({"json", "csv"}));

    struct Command {
        const char* name;
        const char* help;
        Report (*run)(RunConfig);
    };
    const Command commands[] = {
        {"forms", "alpha, i beta and frames on null directions of boundary samples", cmd_forms},
        {"levi", "Levi eigenvalues at boundary samples", cmd_levi},
        {"check", "certificate search and interior check at one eta", cmd_check},
        {"estimate", "bisection for the index over the configured basis", cmd_estimate},
        {"worm-bench", "worm closed forms, Riccati threshold and estimate", cmd_worm_bench},
        {"selftest", "invariant suites at reduced sample counts", cmd_selftest},
    };
    for (const auto& c : commands) {
        auto* sub = app.add_subcommand(c.name, c.help);
        if (std::string(c.name) == "check") sub->add_option("--eta", eta, "exponent to check")->check(CLI::Range(0.0, 0.999999));
    }

    CLI11_PARSE(app, argc, argv);

    try {
        RunConfig cfg = config_path.empty() ? RunConfig{} : load_config(config_path);
        if (seed) cfg.seed = *seed;
        if (samples) cfg.samples = *samples;
        if (eta) cfg.eta = *eta;
        const Command* chosen = nullptr;
        for (const auto& c : commands)
            if (app.got_subcommand(c.name)) chosen = &c;
        const Report rep = chosen->run(cfg);
        const std::string json_text = rep.to_json().dump(2) + "\n";
        if (!out_dir.empty()) {
            std::filesystem::create_directories(out_dir);
            write_file(std::filesystem::path(out_dir) / (rep.command + ".json"), json_text);
            write_file(std::filesystem::path(out_dir) / (rep.command + ".csv"), rep.to_csv());
        }
        std::cout << (format == "csv" ? rep.to_csv() : json_text);
        if (rep.summary.contains("text")) std::cerr << rep.summary["text"].get<std::string>() << "\n";
        return rep.exit_code;
    } catch (const dfi::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
}
