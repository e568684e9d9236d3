// adiabat: run, validate and batch scenario configs.

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "adiabat/errors.hpp"
#include "adiabat/scenario.hpp"

namespace fs = std::filesystem;

namespace {

int report(const std::exception& e) {
    std::cerr << "adiabat: " << e.what() << "\n";
    return adiabat::exit_code_for(e);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Adiabatic vs zero-polytropic process simulator"};
    app.require_subcommand(1);
    app.set_version_flag("--version", ADIABAT_VERSION);

    std::string config, out, suite_dir;
    int jobs = 1;

    auto* run = app.add_subcommand("run", "Run one scenario config");
    run->add_option("config", config, "Scenario config (INI)")->required();
    run->add_option("--out", out, "Output directory (default: [output] dir, else $ADIABAT_OUT/<name>)");

    auto* suite = app.add_subcommand("suite", "Run every *.ini in a directory");
    suite->add_option("dir", suite_dir, "Directory of scenario configs")->required();
    suite->add_option("--jobs", jobs, "Concurrent scenario runs")->check(CLI::PositiveNumber);
    suite->add_option("--out", out, "Output root (default: $ADIABAT_OUT, else ./adiabat_out)");

    auto* validate = app.add_subcommand("validate", "Parse and validate a config without running it");
    validate->add_option("config", config, "Scenario config (INI)")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (*validate) {
            const auto s = adiabat::load_scenario(config);
            std::cout << "ok: " << s.name << " (" << adiabat::to_string(s.experiment) << ")\n";
            return 0;
        }
        if (*run) {
            const auto s = adiabat::load_scenario(config);
            const auto dir = adiabat::resolve_output_dir(
                s, out.empty() ? std::nullopt : std::optional<fs::path>(out));
            const auto manifest = adiabat::run_scenario(s, dir);
            std::cout << s.name << ": " << manifest.files.size() << " files in " << dir.string() << " ("
                      << manifest.duration_seconds << " s)\n";
            for (const auto& f : manifest.files) std::cout << "  " << f.sha256 << "  " << f.name << "\n";
            return 0;
        }
        const fs::path root = out.empty() ? adiabat::default_output_root() : fs::path(out);
        const auto result = adiabat::run_suite(suite_dir, root, jobs);
        for (const auto& e : result.entries) {
            if (e.exit_code == 0)
                std::cout << "ok      " << e.config.filename().string() << "\n";
            else
                std::cout << "FAILED  " << e.config.filename().string() << " (exit " << e.exit_code
                          << "): " << e.error << "\n";
        }
        std::cout << "index: " << (root / "index.json").string() << "\n";
        return result.exit_code();
    } catch (const std::exception& e) {
        return report(e);
    }
}
