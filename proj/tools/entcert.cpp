// Command-line front end: certify, verify, table, partitions.

#include <cstdio>
#include <fstream>
#include <iomanip>
#include <iostream>

#include <CLI11.hpp>

#include "entcert/report.hpp"

using namespace entcert;

namespace {

enum Exit { kOk = 0, kIoError = 1, kVerifyFailed = 2, kSolverFailed = 3 };

struct BudgetFlags {
  int vertices = 100;
  int epochs = 0;
  int sweeps = 20;
  std::uint64_t seed = 1;
  double threshold_r = 0.0;
  std::string mub = "auto";

  void attach(CLI::App* app) {
    app->add_option("--vertices", vertices, "Product states per maximal partition")->check(CLI::PositiveNumber);
    app->add_option("--epochs", epochs, "Descent iterations per stage (0 keeps the default)")->check(CLI::NonNegativeNumber);
    app->add_option("--sweeps", sweeps, "Maximum number of SDP sweeps")->check(CLI::PositiveNumber);
    app->add_option("--seed", seed, "Random seed");
    app->add_option("--threshold-r", threshold_r, "Segment radius r (0 means 0.01*||rho - sigma||)")
        ->check(CLI::NonNegativeNumber);
    app->add_option("--mub", mub, "Pauli-eigenstate augmentation: auto, on, off or sample=K");
  }

  CertifyConfig config() const {
    CertifyConfig c;
    c.per_partition = vertices;
    if (epochs > 0) {
      c.gd.stage1_max_iterations = epochs;
      c.gd.stage2_max_iterations = epochs;
    }
    c.max_sweeps = sweeps;
    c.seed = seed;
    c.gd.threshold_r = threshold_r;
    if (mub == "auto") {
      c.mub = MubMode::kAuto;
    } else if (mub == "on") {
      c.mub = MubMode::kOn;
    } else if (mub == "off") {
      c.mub = MubMode::kOff;
    } else if (mub.rfind("sample=", 0) == 0) {
      c.mub = MubMode::kOn;
      c.mub_sample = std::stoi(mub.substr(7));
      if (c.mub_sample <= 0) throw std::invalid_argument("--mub sample=K needs K > 0");
    } else {
      throw std::invalid_argument("--mub must be auto, on, off or sample=K");
    }
    return c;
  }
};

struct TargetFlags {
  std::string state = "ghz";
  int n = 4;
  std::string noise = "white";

  void attach(CLI::App* app) {
    app->add_option("--state", state, "ghz, w, dicke, dicke:K, cluster, or file:PATH");
    app->add_option("--n", n, "Number of qubits")->check(CLI::Range(2, 12));
    app->add_option("--noise", noise, "white, biased-product, or file:PATH");
  }

  void apply(RunConfig& cfg) const {
    if (state.rfind("file:", 0) == 0) {
      cfg.state_file = state.substr(5);
    } else {
      cfg.state = state;
      cfg.n = n;
    }
    cfg.noise = noise;
  }
};

void write_json(const nlohmann::json& j, const std::string& path) {
  if (path.empty() || path == "-") {
    std::cout << j.dump(1) << '\n';
    return;
  }
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << j.dump(1) << '\n';
}

void print_checks(const VerificationReport& r) {
  for (const auto& c : r.checks)
    std::cout << "  " << std::left << std::setw(10) << c.name << (c.passed ? "PASS  " : "FAIL  ") << c.detail << '\n';
  std::cout << "verification: " << (r.passed ? "PASS" : "FAIL") << '\n';
}

void print_trace_csv(const std::string& path, const RunConfig& cfg) {
  // Re-runs the descent alone with tracing on; cheap next to the SDP stage.
  const DensityMatrix rho = cfg.target();
  const NoiseModel noise = cfg.noise_model(rho.layout());
  const StructureFamily fam = family(cfg.structure_spec());
  GdConfig gd = cfg.certify.gd;
  gd.seed = cfg.certify.seed;
  gd.record_trace = true;
  const GdResult res = run(init_ensemble(fam, rho.layout(), cfg.certify.per_partition, cfg.certify.seed), rho.matrix(),
                           noise.endpoint.matrix(), gd);
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "iteration,stage,loss,segment_distance\n" << std::setprecision(12);
  for (const auto& row : res.trace)
    out << row.iteration << ',' << row.stage << ',' << row.loss << ',' << row.segment_distance << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Certify multipartite entanglement structure of noisy quantum states"};
  app.require_subcommand(1);

  auto* certify_cmd = app.add_subcommand("certify", "Find the largest certified mixing parameter t");
  TargetFlags certify_target;
  BudgetFlags certify_budget;
  std::string structure = "full-sep";
  std::string out_path;
  std::string trace_path;
  certify_target.attach(certify_cmd);
  certify_budget.attach(certify_cmd);
  certify_cmd->add_option("--structure", structure, "full-sep, part:K, prod:H, sq:Q, tough:L, custom:T1,T2");
  certify_cmd->add_option("--out", out_path, "Report path (stdout when omitted)");
  certify_cmd->add_option("--trace", trace_path, "Also write the descent loss trace as CSV");

  auto* verify_cmd = app.add_subcommand("verify", "Re-check a certificate or report from scratch");
  std::string cert_path;
  TargetFlags verify_target;
  verify_cmd->add_option("certificate", cert_path, "Report or certificate JSON")->required();
  verify_target.attach(verify_cmd);

  auto* table_cmd = app.add_subcommand("table", "Reproduce a table of published thresholds");
  std::string table_id;
  BudgetFlags table_budget;
  std::string table_out;
  std::string reports_dir;
  bool no_timings = false;
  table_cmd->add_option("table", table_id, "I, II, III, IV, V or biased")->required();
  table_budget.attach(table_cmd);
  table_cmd->add_option("--out", table_out, "CSV path (stdout when omitted)");
  table_cmd->add_option("--reports", reports_dir, "Directory for one JSON report per row");
  table_cmd->add_flag("--no-timings", no_timings, "Write zero timings so repeated runs compare byte-for-byte");

  auto* part_cmd = app.add_subcommand("partitions", "Print the maximal partitions of a structure class");
  int part_n = 4;
  std::string part_structure = "full-sep";
  part_cmd->add_option("--n", part_n, "Number of parties")->check(CLI::Range(1, 12));
  part_cmd->add_option("--structure", part_structure, "Structure class");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kIoError;
  }

  try {
    if (*part_cmd) {
      const StructureFamily fam = family(StructureSpec::parse(part_structure, part_n));
      std::cout << fam.spec.to_string() << ": " << fam.maximal_partitions.size() << " maximal partitions\n";
      for (const auto& p : fam.maximal_partitions) std::cout << "  " << p.to_string() << "   (" << p.type_string() << ")\n";
      return kOk;
    }

    if (*certify_cmd) {
      RunConfig cfg;
      certify_target.apply(cfg);
      cfg.structure = structure;
      cfg.certify = certify_budget.config();
      if (!trace_path.empty()) print_trace_csv(trace_path, cfg);
      Report report;
      try {
        report = run_certification(cfg);
      } catch (const CertificationError& e) {
        std::cerr << "solver failure: " << e.what() << '\n';
        return kSolverFailed;
      }
      write_json(report.to_json(), out_path);
      std::cerr << report.config.case_label() << ' ' << report.config.structure << ": t_certified = " << std::setprecision(6)
                << report.certificate.t_certified;
      if (report.t_reference) std::cerr << " (reference " << *report.t_reference << ")";
      std::cerr << "  gd " << std::setprecision(3) << report.certificate.gd_seconds << "s  sdp "
                << report.certificate.sdp_seconds << "s\n";
      return report.verification.passed ? kOk : kVerifyFailed;
    }

    if (*verify_cmd) {
      std::ifstream in(cert_path);
      if (!in) throw std::runtime_error("cannot open " + cert_path);
      const nlohmann::json j = nlohmann::json::parse(in);
      const bool is_report = j.contains("certificate");
      const Certificate cert = Certificate::from_json(is_report ? j.at("certificate") : j);
      RunConfig cfg;
      if (is_report && verify_cmd->count("--state") == 0 && verify_cmd->count("--noise") == 0) {
        cfg = RunConfig::from_json(j.at("config"));
      } else {
        verify_target.apply(cfg);
      }
      const DensityMatrix rho = cfg.target();
      const VerificationReport r = verify(cert, rho, cfg.noise_model(rho.layout()));
      std::cout << "certificate " << cert_path << "  t_certified = " << cert.t_certified << '\n';
      print_checks(r);
      return r.passed ? kOk : kVerifyFailed;
    }

    if (*table_cmd) {
      const auto cases = table_cases(table_id);
      if (!reports_dir.empty()) std::filesystem::create_directories(reports_dir);
      const auto rows = run_table(cases, table_budget.config(), table_budget.epochs, worker_count(),
                                  [&](const TableRow& row, const Report* report) {
                                    std::cerr << row.known.label() << ' ' << row.known.structure << ": "
                                              << (row.t_ours ? std::to_string(*row.t_ours) : std::string("-")) << " ["
                                              << row.status << "]\n";
                                    if (report && !reports_dir.empty()) {
                                      const std::string name = row.known.label() + "_" + row.known.structure + ".json";
                                      std::string safe = name;
                                      for (char& c : safe)
                                        if (c == ':' || c == '|' || c == ',') c = '_';
                                      write_json(report->to_json(), (std::filesystem::path(reports_dir) / safe).string());
                                    }
                                  });
      if (table_out.empty()) {
        write_table_csv(std::cout, rows, !no_timings);
      } else {
        std::ofstream out(table_out);
        if (!out) throw std::runtime_error("cannot write " + table_out);
        write_table_csv(out, rows, !no_timings);
      }
      return kOk;
    }
  } catch (const CertificationError& e) {
    std::cerr << "solver failure: " << e.what() << '\n';
    return kSolverFailed;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kIoError;
  }
  return kOk;
}
