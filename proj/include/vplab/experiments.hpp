#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "vplab/chaos.hpp"
#include "vplab/kernels.hpp"
#include "vplab/sampling.hpp"
#include "vplab/types.hpp"

namespace vplab {

// ---------------------------------------------------------------------------
// Configuration: `[section]` headers, `key = value` lines, `#`/`;` comments.

struct ConfigEntry {
    std::string section;
    std::string key;
    std::string value;
    std::string source;  ///< file name or "<override>"
    std::size_t line = 0;

    std::string field() const { return section + "." + key; }
};

class ConfigDocument {
  public:
    static ConfigDocument parse(std::string_view text, const std::string& source = "<string>");
    static ConfigDocument load(const std::filesystem::path& path);

    /// Sets `section.key`, replacing an earlier value.
    void set(const std::string& field, const std::string& value, const std::string& source = "<override>");
    const ConfigEntry* find(const std::string& field) const;
    const std::vector<ConfigEntry>& entries() const { return entries_; }

  private:
    std::vector<ConfigEntry> entries_;
};

struct DistributionConfig {
    std::string kind = "thermal";          ///< thermal | uniform_ball
    std::string profile = "uniform_ball";  ///< uniform_ball | truncated_gaussian
    double radius = 1.0;
    double width = 1.0;
    double beta = 1.0;
    double p_max = 1.0;

    InitialDistribution build() const;
};

struct ExperimentConfig {
    DistributionConfig distribution;
    int sigma = 1;
    double alpha = 2.0;
    double delta = 0.3;
    std::vector<std::size_t> n_grid{64};
    std::size_t kappa = 8;
    double horizon = 0.5;
    double dt = 2e-3;
    std::size_t snapshots = 50;
    std::size_t trials = 1;
    std::uint64_t seed = 0;
    std::optional<double> lambda;
    double density_h = 0.25;
    bool membership = true;
    std::vector<double> p_list{2.0};
    std::size_t exact_max_n = 2048;
    std::size_t projections = 256;
    std::size_t proxy_factor = 64;
    std::size_t bootstrap = 1000;
    std::size_t audit_samples = 100000;
    std::string input_a;
    std::string input_b;
    /// Execution settings: not part of the hash.
    std::size_t threads = 0;  ///< 0: all hardware threads
    std::string output_dir;   ///< empty: $VPLAB_OUTPUT_ROOT or "vplab-out"

    static ExperimentConfig from_document(const ConfigDocument& doc);

    /// Every experiment field, one `section.key = value` line each, fixed order.
    std::string canonical() const;
    /// FNV-1a 64 of canonical().
    std::uint64_t hash() const;
    TrialSettings trial_settings(std::size_t n) const;
    std::filesystem::path output_root() const;
};

std::uint64_t fnv1a64(std::string_view bytes);

// ---------------------------------------------------------------------------
// Snapshot files

enum class SnapshotKind : std::uint8_t { micro = 0, reference = 1 };

struct Snapshot {
    SnapshotKind kind = SnapshotKind::micro;
    PhaseState state;
    double delta = 0.0;
    double sigma = 1.0;
    double alpha = 2.0;
};

inline constexpr std::uint8_t kSnapshotVersion = 1;
/// 7 magic + 1 version + 1 kind + 8 n + 4 * 8 header doubles.
inline constexpr std::size_t kSnapshotHeaderBytes = 49;

std::vector<std::uint8_t> encode_snapshot(const Snapshot& snap);
/// Throws FormatError with the byte offset of the first inconsistency.
Snapshot decode_snapshot(std::span<const std::uint8_t> bytes, std::optional<SnapshotKind> expected = std::nullopt);

void write_snapshot(const std::filesystem::path& path, const Snapshot& snap);
Snapshot read_snapshot(const std::filesystem::path& path, std::optional<SnapshotKind> expected = std::nullopt);

// ---------------------------------------------------------------------------
// Runner

struct RunResult {
    std::filesystem::path directory;
    std::vector<std::string> files;
    std::vector<std::string> summary;  ///< human-readable lines
};

inline constexpr const char* kSubcommands[] = {"sample",  "evolve", "meanfield",   "compare",
                                               "chaos",   "rate",   "wasserstein", "audit"};

/// Runs a subcommand and writes its CSV/JSONL results, manifest.json and
/// schema.json under output_root()/<subcommand>.
RunResult run_experiment(const std::string& subcommand, const ExperimentConfig& config);

const char* version_string();

}  // namespace vplab
