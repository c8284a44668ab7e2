#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "gfa/spectral.hpp"
#include "gfa/synthesis.hpp"
#include "gfa/types.hpp"

namespace gfa {

/// Malformed input file; carries the offending line (1-based, 0 = unknown).
struct ParseError : std::runtime_error {
    ParseError(const std::string& msg, Index line = 0, Index column = 0)
        : std::runtime_error(msg), line(line), column(column) {}
    Index line;
    Index column;
};

/// Invalid scenario configuration; carries key and line.
struct ConfigError : std::runtime_error {
    ConfigError(const std::string& msg, std::string key, Index line)
        : std::runtime_error(msg), key(std::move(key)), line(line) {}
    std::string key;
    Index line;
};

/// Comma-separated numeric matrix. Raises ParseError with the 1-based row and
/// column on a non-numeric cell or ragged rows.
Matrix read_csv_matrix(const std::string& path, bool skip_header = false);

/// Writes with 17 significant digits so values round-trip exactly.
void write_csv_matrix(const std::string& path, const Matrix& m, bool header = false);

/// Declarative synthesis scenario, parsed from a key = value file.
struct ScenarioConfig {
    enum class Kind { Aggregate, Idiosyncratic, Pd, Field };

    Kind kind = Kind::Aggregate;
    Index n = 100;
    Index m = 1;   ///< replicates
    Index t = 1;   ///< time points (field scenarios)
    std::uint64_t seed = 0;
    std::vector<LoadingSpec> loadings;
    std::optional<NoiseSpec> noise;
    std::vector<PDLine> lines;
    TimeSpec time;
};

ScenarioConfig parse_scenario_file(const std::string& path);

/// Shared auditability block: every report embeds the parameters it ran with.
struct DecomposeFlags {
    std::vector<Index> grid;  ///< empty = ratio-2 default grid
    int grid_points = 5;
    int top_m = 6;
    double gamma = 1.5;
    double tau = 10.0;
    bool header = false;
};

struct StationaryFlags {
    int max_lines = 8;
    double threshold = 20.0;
    bool header = false;
};

// Command implementations behind the CLI; each writes its artifact files into
// out_dir and returns the path of the primary report.
std::string run_synth(const std::string& config_path, const std::string& out_dir,
                      std::optional<std::uint64_t> seed_override = std::nullopt);
std::string run_decompose(const std::string& input_csv, const std::string& out_dir,
                          const DecomposeFlags& flags = {});
std::string run_stationary(const std::string& input_csv, const std::string& out_dir,
                           const StationaryFlags& flags = {});
std::string run_flock(const std::string& input_csv, const std::string& out_dir,
                      const DecomposeFlags& flags = {});

}  // namespace gfa
