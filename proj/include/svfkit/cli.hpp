#pragma once

// Command-line front end: input files, job configuration, dispatch and the
// JSON report.

#include "svfkit/tuple.hpp"

#include <json.hpp>

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace svfkit::cli {

using Json = nlohmann::ordered_json;

inline constexpr int kExitOk = 0;
inline constexpr int kExitParse = 2;
inline constexpr int kExitNumeric = 3;
inline constexpr int kExitInconclusive = 4;

struct JobConfig {
  std::string input;
  std::string command;
  std::optional<double> s;
  std::optional<std::string> grid;
  std::size_t n_max = 8;
  double tol = 1e-9;
  std::optional<std::uint64_t> seed;
  unsigned threads = 1;
  /// "rational" or "float"; overrides the file's `scalars` field.
  std::optional<std::string> backend;
  std::optional<std::string> output;
  std::optional<std::string> csv;
  bool strict = false;
  /// Fail with exit 3 unless the answer comes from an exact route.
  bool exact = false;
  bool timing = false;
  /// 1-based, as typed.
  std::optional<std::size_t> remove;
  std::optional<int> k;
  // lyapunov
  std::string method = "auto";
  std::size_t samples = 10000;
  std::size_t length = 200;
  std::size_t lyapunov_n = 10;
  std::optional<std::string> weights;
  /// 1-based equilibrium state used as the measure.
  std::optional<std::size_t> state;
  // equilibria
  std::size_t gibbs_n = 6;
};

/// Reads and validates an input file. Errors are InputError with the file
/// name and the offending field, e.g. `matrices[1][0][2]`.
MatrixTuple parse_input(const std::string& path, const std::optional<std::string>& backend = {});
MatrixTuple parse_input_text(const std::string& text, const std::string& source,
                             const std::optional<std::string>& backend = {});

/// Tuple as it appears in the input schema (string entries).
Json tuple_to_json(const MatrixTuple& tuple);

struct RunResult {
  Json report;
  int exit_code = kExitOk;
};

/// Runs one command. Module errors propagate as exceptions.
RunResult run(const JobConfig& cfg);

/// Full command line handling; returns the process exit code.
int main(int argc, char** argv, std::ostream& out, std::ostream& err);

/// Serialises with a fixed layout so equal reports give equal bytes.
std::string dump(const Json& report);

}  // namespace svfkit::cli
