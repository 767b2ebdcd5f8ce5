#pragma once

// Pipeline stages behind the `odeflow` command. Every stage reads and writes
// inside the run directory (config `out`, or --out):
//
//   worldgen  world.cfg, world_samples.csv
//   train     <kind>_attr<i>.ckpt + .meta   (kind = constant|affine|net)
//   baseline  svm_attr<i>.ckpt + .meta     (CONSTANT field along the SVM normal)
//   eval      cd_<method>_attr<i>.csv for every checkpoint found
//   analyze   spectral.csv for the trained fields
//   report    cd_curves.svg, summary.txt
//
// Each stage refreshes manifest.json. Files are written to a temporary name
// and renamed into place.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "odeflow/config.hpp"
#include "odeflow/errors.hpp"

namespace odeflow {

// Bad command line, bad config, or nothing to do. Maps to exit code 1.
class UsageError : public Error {
 public:
  using Error::Error;
};

struct RunOptions {
  std::string config_path;  // empty = all defaults
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  bool quiet = false;
};

inline constexpr const char* kToolVersion = "1.0.0";

/// Reads, parses and validates the config, then applies the overrides.
/// Config problems surface as UsageError.
ExperimentConfig load_config(const RunOptions& options);

/// Sidecar of a checkpoint: world descriptor plus an `[edit]` block.
struct EditMeta {
  WorldParams world;
  std::size_t attribute = 0;
  int source = 0;
  int target = 1;
  double t_max = 12.0;
  std::string method;
};

std::string meta_text(const EditMeta& meta);
EditMeta parse_meta(const std::string& text);

/// 64-bit FNV-1a of a byte string, as 16 lowercase hex digits.
std::string fnv1a_hex(const std::string& bytes);

/// Writes `content` next to `path` and renames it into place.
void write_atomic(const std::filesystem::path& path, const std::string& content);
std::string read_file(const std::filesystem::path& path);

/// Stage entry points. `log` receives progress unless it is null.
void run_worldgen(const ExperimentConfig& config, std::ostream* log);
void run_train(const ExperimentConfig& config, std::ostream* log);
void run_baseline(const ExperimentConfig& config, std::ostream* log);
void run_eval(const ExperimentConfig& config, std::ostream* log);
void run_analyze(const ExperimentConfig& config, std::ostream* log);
void run_report(const ExperimentConfig& config, std::ostream* log);

/// Dispatches by name and maps failures to exit codes: 0 success, 1 usage
/// error, 2 runtime failure. Messages go to `err`.
int run_command(const std::string& command, const RunOptions& options, std::ostream& out, std::ostream& err);

struct CurveFile {
  std::string method;
  std::size_t attribute = 0;
  std::filesystem::path path;
};

/// cd_<method>_attr<i>.csv files in `dir`, sorted by attribute then method.
std::vector<CurveFile> find_curves(const std::filesystem::path& dir);

/// SVG with one unit-square panel per attribute, all methods overlaid.
std::string render_cd_svg(const std::vector<std::pair<CurveFile, CDCurve>>& curves);

}  // namespace odeflow
