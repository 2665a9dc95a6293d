#pragma once

#include "codimred/frenet.hpp"
#include "codimred/reduction.hpp"

#include <cstdint>
#include <iosfwd>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace codimred::cli {

inline constexpr int kSchemaVersion = 1;

[[nodiscard]] const char* tool_version();

/// Invalid scenario text; line is 1-based, 0 when unknown.
class ScenarioError : public Error {
 public:
  ScenarioError(const std::string& source, int line, const std::string& what);
  [[nodiscard]] int line() const { return line_; }

 private:
  int line_;
};

struct CatalogEntry {
  std::string kind;
  std::string name;
  std::string description;
};

/// Built-in spaces, immersions, bundles, constructions, checks and bundled
/// scenarios in a fixed order. A non-empty filter keeps entries whose kind
/// or name contains it.
[[nodiscard]] std::vector<CatalogEntry> catalog(const std::string& filter = {});
[[nodiscard]] std::string catalog_text(const std::vector<CatalogEntry>& entries);
[[nodiscard]] std::string catalog_json(const std::vector<CatalogEntry>& entries);

[[nodiscard]] std::vector<std::string> bundled_scenario_names();
[[nodiscard]] std::optional<std::string> bundled_scenario_text(const std::string& name);

enum class Expectation { Pass, Fail, Any };

[[nodiscard]] const char* to_string(Expectation e);

struct CheckSpec {
  std::string name;
  double tol = 0.0;
  Expectation expect = Expectation::Pass;
  std::map<std::string, double> options;
  int line = 0;
};

/// A validated scenario with its geometry built.
struct Scenario {
  std::string name;
  std::string description;
  std::string source;
  std::shared_ptr<const NormalSubbundle> bundle;
  std::vector<Vec> grid;   ///< pointwise sample nodes
  std::vector<Vec> curve;  ///< parameter path for the parallel check
  EnvelopeOptions envelope;
  std::vector<CheckSpec> checks;
};

[[nodiscard]] Scenario parse_scenario(const std::string& text, const std::string& source);

/// A readable file path, else a bundled scenario name.
[[nodiscard]] Scenario load_scenario(const std::string& file_or_name);

struct RunOptions {
  std::uint64_t seed = 0;
  double tol_scale = 1.0;
  bool parallel = true;
  bool timing = true;
};

struct CheckOutcome {
  CheckReport report;
  Expectation expect = Expectation::Pass;
  bool as_expected = false;
  std::string error;  ///< set when the check threw
};

struct RunReport {
  std::string scenario;
  std::string description;
  std::string source;
  std::uint64_t seed = 0;
  double tol_scale = 1.0;
  std::vector<CheckOutcome> checks;
  bool ok = false;
  double runtime_ms = 0.0;
};

[[nodiscard]] RunReport run_scenario(const Scenario& scenario, const RunOptions& opts = {});
[[nodiscard]] std::string report_json(const RunReport& report);
[[nodiscard]] std::string report_text(const RunReport& report);

/// Tolerance scale from CODIMRED_TOL_SCALE, 1 when unset; throws Error when
/// the value is not a positive number.
[[nodiscard]] double env_tol_scale();

/// The command-line program. Exit codes: 0 as expected, 1 mismatch, 2 usage
/// or scenario error.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace codimred::cli
