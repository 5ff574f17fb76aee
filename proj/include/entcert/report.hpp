#pragma once

#include <filesystem>
#include <functional>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "entcert/certify.hpp"

namespace entcert {

/// Everything needed to reproduce one certification run.
struct RunConfig {
  std::string state = "ghz";          // builtin name understood by StateSpec::parse
  int n = 4;
  std::optional<std::filesystem::path> state_file;  // overrides `state`/`n`
  std::string noise = "white";        // white | biased-product | file:PATH
  std::string structure = "full-sep";
  CertifyConfig certify;

  DensityMatrix target() const;
  NoiseModel noise_model(const PartyLayout& layout) const;
  StructureSpec structure_spec() const;
  /// Short label such as "ghz-4" (or the file name for file states).
  std::string case_label() const;

  nlohmann::json to_json() const;
  /// Restores the state/noise/structure selection and the seed; the remaining
  /// budget fields are taken from `base`.
  static RunConfig from_json(const nlohmann::json& j, const CertifyConfig& base = {});
};

/// A published threshold used as a comparison column.
struct KnownCase {
  std::string table;      // "I".."V", or "biased"
  std::string state;
  int n = 0;
  std::string noise;
  std::string structure;
  double t_reference = 0.0;
  /// Descent iterations used for this row unless overridden.
  int default_epochs = 1000;

  std::string label() const { return state + "-" + std::to_string(n); }
};

std::span<const KnownCase> known_cases();
std::vector<KnownCase> table_cases(const std::string& table_id);
std::optional<double> reference_value(const RunConfig& cfg);

struct Report {
  RunConfig config;
  Certificate certificate;
  VerificationReport verification;
  std::optional<double> t_reference;

  nlohmann::json to_json() const;
};

nlohmann::json verification_to_json(const VerificationReport& r);

/// certify + verify for one configuration.
Report run_certification(const RunConfig& cfg);

struct TableRow {
  KnownCase known;
  std::optional<double> t_ours;
  double gd_seconds = 0.0;
  double sdp_seconds = 0.0;
  std::string status;  // "ok", "unverified" or an error message
};

/// Worker count: hardware concurrency, capped by ENTCERT_THREADS when set.
int worker_count();

/// Runs the rows concurrently on `workers` threads. `epochs` <= 0 keeps each
/// row's default budget. `on_row` is called (serialized) as rows finish.
std::vector<TableRow> run_table(std::span<const KnownCase> cases, const CertifyConfig& base, int epochs, int workers,
                                const std::function<void(const TableRow&, const Report*)>& on_row = {});

/// CSV columns: case,structure,t_ours,t_paper,delta,gd_seconds,sdp_seconds,status.
/// With `timings` false the timing columns are written as 0 so that runs with
/// identical seeds produce identical files.
void write_table_csv(std::ostream& out, std::span<const TableRow> rows, bool timings = true);

}  // namespace entcert
