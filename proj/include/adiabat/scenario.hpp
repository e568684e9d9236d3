#pragma once

// Scenario configs (INI: top-level keys plus one level of [sections]), the
// five experiment kinds, and deterministic report directories.

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "adiabat/continuum.hpp"
#include "adiabat/crossing_sweep.hpp"
#include "adiabat/spectra.hpp"
#include "adiabat/thermo.hpp"

namespace adiabat {

enum class Experiment { DiscreteSweep, ContinuumAdvect, Compare, RefineEntropy, SizeScaling };
enum class InitialKind { Canonical, Uniform, CustomTable };

std::string_view to_string(Experiment experiment);

struct InitialSpec {
    InitialKind kind = InitialKind::Canonical;
    double temperature = 1.0;
    /// custom_table: one w per level, in level-id order.
    std::vector<double> w;
    /// uniform continuum start: w = 1/Phi(e_max) below e_max.
    double e_max = 0.0;
};

struct SweepSpec {
    double a_start = 1.0;
    double a_end = 2.0;
    std::vector<double> checkpoints;
    bool round_trip = false;
};

struct NumericsSpec {
    SolverOptions solver;
    double detection_tol = 1e-9;
    std::size_t scan_samples = 4096;
    TemperatureBracket bracket;
    TransportMethod method = TransportMethod::Ode;
};

struct StudySpec {
    std::vector<int> levels;  // refine_entropy: ladder sizes M
    std::vector<int> sizes;   // size_scaling: copy counts N
};

using ConfigEcho = std::map<std::string, std::map<std::string, std::string>>;

struct Scenario {
    std::string name;
    Experiment experiment = Experiment::ContinuumAdvect;
    SpectrumFamily spectrum;
    InitialSpec initial;
    SweepSpec sweep;
    NumericsSpec numerics;
    StudySpec study;
    /// [output] dir; empty when not given.
    std::string output_dir;
    /// Raw key/value pairs by section ("" for top-level keys).
    ConfigEcho echo;
};

/// Parses and validates. ConfigError naming the key and the violated constraint.
Scenario parse_scenario(std::string_view text);
Scenario load_scenario(const std::filesystem::path& path);

struct ManifestFile {
    std::string name;
    std::string sha256;
    std::uintmax_t bytes = 0;
};

struct RunManifest {
    std::string scenario;
    std::filesystem::path directory;
    std::string version;
    std::string timestamp;  // UTC, ISO 8601
    double duration_seconds = 0.0;
    /// Data files (everything except manifest.json), sorted by name.
    std::vector<ManifestFile> files;
};

/// Runs the experiment and writes its reports plus manifest.json into
/// `directory` (created if needed). Module errors propagate with the scenario
/// name prefixed.
RunManifest run_scenario(const Scenario& scenario, const std::filesystem::path& directory);

/// --out, else [output] dir, else $ADIABAT_OUT/<name>, else ./adiabat_out/<name>.
std::filesystem::path resolve_output_dir(const Scenario& scenario, const std::optional<std::filesystem::path>& cli_out);

/// Default output root: $ADIABAT_OUT or ./adiabat_out.
std::filesystem::path default_output_root();

struct SuiteEntry {
    std::filesystem::path config;
    std::optional<RunManifest> manifest;
    std::string error;
    int exit_code = 0;
};

struct SuiteResult {
    std::vector<SuiteEntry> entries;
    bool ok() const;
    /// 0 when every scenario succeeded, else the first failing code in config order.
    int exit_code() const;
};

/// All *.ini files in `config_dir` (sorted by name), at most `jobs` at a time.
/// Scenario k writes into out_root/<config stem>; out_root/index.json lists
/// every entry. A failing scenario does not stop the others.
SuiteResult run_suite(const std::filesystem::path& config_dir, const std::filesystem::path& out_root, int jobs);

/// Exit code for an exception escaping a run: 2 config, 3 numerical, 1 other.
int exit_code_for(const std::exception& e);

std::string sha256_hex(std::string_view bytes);

}  // namespace adiabat
