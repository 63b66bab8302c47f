#pragma once

/// \file
/// Strict JSON forms of specs, run configurations and reports.
///
/// Readers reject unknown keys, wrong types and missing required fields with
/// a ConfigError naming the offending field ("spec.beta.seq.ratio") or the
/// line and column of a syntax error. Finite beta sequences are written and
/// read one-based (values[0] is beta_1) unless "base" says otherwise.

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "projlm/model.hpp"
#include "projlm/rng.hpp"
#include "projlm/series.hpp"
#include "projlm/solvability.hpp"

namespace projlm {

class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string field, const std::string& message)
      : std::runtime_error(field.empty() ? message : field + ": " + message),
        field_(std::move(field)) {}
  [[nodiscard]] const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

struct DiagnosticsSelection {
  std::size_t acf_max_lag = 200;
  /// Empty: default fit grid.
  std::vector<std::size_t> fit_lags;
  /// Empty: default block grid.
  std::vector<std::size_t> block_sizes;
  std::size_t bins = 40;
  /// Center autocovariances and block sums at the spec mean instead of the
  /// per-path sample mean.
  bool known_mean = true;
  std::vector<std::size_t> squared_cov_lags{1};
};

struct OracleSelection {
  std::size_t window = 8;
  std::size_t trials = 50;
};

struct LarchSelection {
  bool simulate = false;
  std::optional<MomentParams> moment;
};

struct RunConfig {
  EquationSpec spec;
  std::size_t n = 1000;
  std::optional<std::size_t> M;
  std::uint64_t seed = 1;
  std::size_t replicates = 1;
  Distribution distribution = Distribution::Normal;
  TruncationPolicy truncation;
  std::optional<MomentParams> moment;
  DiagnosticsSelection diagnostics;
  OracleSelection oracle;
  LarchSelection larch;
  std::string output_dir = "out";
};

[[nodiscard]] std::string spec_to_json(const EquationSpec& spec, int indent = 2);
[[nodiscard]] EquationSpec spec_from_json(std::string_view text);

[[nodiscard]] std::string run_config_to_json(const RunConfig& config, int indent = 2);
[[nodiscard]] RunConfig run_config_from_json(std::string_view text);

[[nodiscard]] std::string report_to_json(const SolvabilityReport& report, int indent = 2);
[[nodiscard]] std::string larch_report_to_json(const LarchReport& report, int indent = 2);

/// Reads a whole file; throws ConfigError with the path on failure.
[[nodiscard]] std::string read_text_file(const std::string& path);

}  // namespace projlm
