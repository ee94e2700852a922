#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "rlab/operators.hpp"
#include "rlab/toml_lite.hpp"

namespace rlab::harness {

inline constexpr const char* kArtifactVersion = "rlab/0.1.0";

/// One verdict line of a scenario run: a named measurement against a bound,
/// with a short statement of the property being checked.
struct CheckRecord {
    std::string name;
    std::string property;
    double measured = 0.0;
    double bound = 0.0;
    bool pass = false;
};

/// Scenario outcome. The body (everything except wall_ms) is byte-stable for
/// a fixed config: two runs of the same file produce identical body_json().
struct Report {
    std::string artifact_version = kArtifactVersion;
    std::string scenario;
    std::string config_digest;  // content hash of the raw config text
    std::uint64_t seed = 0;
    std::vector<CheckRecord> checks;
    std::vector<std::string> warnings;
    bool pass = true;      // conjunction of the checks
    double wall_ms = 0.0;  // excluded from body_json

    void add_check(CheckRecord rec);
    std::string body_json() const;
    std::string to_json() const;
};

/// Parsed scenario file plus the raw text it came from. The operator table
/// is parsed eagerly when present; scenarios that need one and lack one
/// fail at run time with a config error.
struct ScenarioConfig {
    std::string kind;
    std::uint64_t seed = 0;
    std::uint64_t max_iter = ops::kDefaultMaxIter;
    std::string source_path;
    std::string raw_text;
    toml::Table doc;
    std::optional<ops::OperatorSpec> op;
};

/// Load a scenario file. kind_override (the CLI subcommand) wins over the
/// [scenario] kind in the file; seed_override wins over [scenario] seed.
/// The RLAB_MAX_ITER environment variable, when set, overrides iteration
/// caps for the run. Throws toml::ParseError / std::invalid_argument on
/// malformed input.
ScenarioConfig load_config(const std::string& path, const std::string& kind_override = "",
                           std::optional<std::uint64_t> seed_override = std::nullopt);

/// Same, from in-memory text (path is used only for messages).
ScenarioConfig load_config_text(const std::string& text, const std::string& kind_override = "",
                                std::optional<std::uint64_t> seed_override = std::nullopt,
                                const std::string& path = "<memory>");

/// Admissibility review: one human-readable line per violated constraint
/// (empty means the config is admissible). Block-structure rules are
/// checked on stored data only; rules about infinite structure are reduced
/// to their finite-range surrogates and flagged as such in run() warnings.
std::vector<std::string> validate(const ScenarioConfig& cfg);

/// Execute the scenario: dispatches on cfg.kind, writes report.json plus
/// scenario artifacts (orbit CSV/JSON, certificate JSON, grid CSV) under
/// out_dir, and returns the report. Configuration problems throw
/// (std::invalid_argument / toml::ParseError); property violations come
/// back as failed checks with pass = false.
Report run(const ScenarioConfig& cfg, const std::string& out_dir = ".");

}  // namespace rlab::harness
