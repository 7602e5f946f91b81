#pragma once

#include <cstdint>
#include <iosfwd>
#include <nlohmann/json.hpp>
#include <optional>
#include <string>

#include "entlab/errors.hpp"
#include "schema.hpp"

namespace entlab::cli {

class MissingArtifact : public Error {
 public:
  explicit MissingArtifact(const std::string& what) : Error(what, 2) {}
};

struct ExperimentConfig {
  std::string kind;
  nlohmann::json doc;       // validated, with measure file references inlined
  std::string base_dir;     // directory of the config file
  std::optional<std::uint64_t> seed;
};

// Throws SchemaError listing every violation with its JSON pointer.
ExperimentConfig parse_config(const std::string& path);
ExperimentConfig parse_config_json(const nlohmann::json& doc, const std::string& base_dir = ".");

struct RunOptions {
  std::string out_dir;                    // empty: ENTLAB_OUT, then config "output", then ./entlab_out
  std::optional<std::uint64_t> seed;      // overrides the config
  int jobs = 1;
  bool strict = false;                    // monitored diagnostics count as failures
  bool fault_sign_flip = false;           // negative-control hook for the stability checks
};

struct RunOutcome {
  bool pass = true;
  bool diagnostics_ok = true;
  std::string out_dir;
  int exit_code() const { return pass ? 0 : 1; }
};

// Runs the experiment, writes its artifacts, the manifest and plotdata.csv.
RunOutcome dispatch(const ExperimentConfig& cfg, const RunOptions& opt, std::ostream& log);

// Long-form (series, x, y) CSV from whatever artifacts the directory holds.
// Returns the number of rows written to <dir>/plotdata.csv.
std::size_t emit_plotdata(const std::string& dir);

// Hash of the canonical config dump (FNV-1a, hex).
std::string config_hash(const nlohmann::json& doc);

// Full command line entry; returns the process exit status.
int run_main(int argc, char** argv);

}  // namespace entlab::cli
