#include "entcert/report.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <iomanip>
#include <mutex>
#include <sstream>
#include <thread>

namespace entcert {

DensityMatrix RunConfig::target() const {
  if (state_file) return load_state(*state_file);
  return make_state(StateSpec::parse(state, n));
}

NoiseModel RunConfig::noise_model(const PartyLayout& layout) const {
  if (noise == "white") return NoiseModel::white(layout);
  if (noise == "biased-product" || noise == "biased") return NoiseModel::biased_product(layout);
  if (noise.rfind("file:", 0) == 0) {
    NoiseModel m{load_state(noise.substr(5))};
    if (!(m.endpoint.layout() == layout)) throw InvariantError("noise file layout differs from the target state");
    return m;
  }
  throw std::invalid_argument("unknown noise model '" + noise + "'");
}

StructureSpec RunConfig::structure_spec() const {
  const int parties = state_file ? target().layout().parties() : n;
  return StructureSpec::parse(structure, parties);
}

std::string RunConfig::case_label() const {
  if (state_file) return state_file->stem().string();
  return StateSpec::parse(state, n).name() + "-" + std::to_string(n);
}

nlohmann::json RunConfig::to_json() const {
  nlohmann::json j{{"state", state}, {"n", n}, {"noise", noise}, {"structure", structure}, {"certify", certify.to_json()}};
  if (state_file) j["state_file"] = state_file->string();
  return j;
}

RunConfig RunConfig::from_json(const nlohmann::json& j, const CertifyConfig& base) {
  RunConfig c;
  c.state = j.value("state", c.state);
  c.n = j.value("n", c.n);
  if (j.contains("state_file")) c.state_file = j.at("state_file").get<std::string>();
  c.noise = j.value("noise", c.noise);
  c.structure = j.value("structure", c.structure);
  c.certify = base;
  if (j.contains("certify")) c.certify.seed = j.at("certify").value("seed", base.seed);
  return c;
}

std::span<const KnownCase> known_cases() {
  static const std::vector<KnownCase> cases = [] {
    std::vector<KnownCase> v;
    auto add = [&](std::string table, std::string state, int n, std::string noise, std::string structure, double t) {
      v.push_back({std::move(table), std::move(state), n, std::move(noise), std::move(structure), t, n >= 5 ? 5000 : 1000});
    };
    add("I", "ghz", 6, "white", "full-sep", 0.0303);
    add("I", "w", 6, "white", "full-sep", 0.0235);
    add("I", "cluster", 6, "white", "full-sep", 0.0303);
    add("I", "ghz", 5, "white", "full-sep", 0.05882);
    add("I", "w", 5, "white", "full-sep", 0.0471);
    add("I", "cluster", 5, "white", "full-sep", 0.0588);
    add("I", "ghz", 4, "white", "full-sep", 0.1111);
    add("I", "w", 4, "white", "full-sep", 0.0926);
    add("I", "cluster", 4, "white", "full-sep", 0.1111);
    add("I", "dicke", 4, "white", "full-sep", 0.0857);

    add("II", "w", 4, "white", "part:3", 0.247);
    add("II", "w", 4, "white", "prod:2", 0.247);
    add("II", "w", 4, "white", "part:2", 0.471);

    add("III", "ghz", 4, "white", "part:3", 0.200);
    add("III", "ghz", 4, "white", "prod:2", 0.273);
    add("III", "ghz", 4, "white", "part:2", 0.465);

    add("IV", "ghz", 5, "white", "part:4", 0.094);
    add("IV", "ghz", 5, "white", "prod:2", 0.238);
    add("IV", "ghz", 5, "white", "part:3", 0.238);
    add("IV", "ghz", 5, "white", "prod:3", 0.385);
    add("IV", "ghz", 5, "white", "part:2", 0.484);

    const char* rows[] = {"tough:1", "tough:2", "sq:7", "sq:9", "sq:11", "sq:13", "sq:17"};
    const double ghz[] = {0.238, 0.484, 0.094, 0.238, 0.238, 0.385, 0.484};
    const double cluster[] = {0.273, 0.360, 0.111, 0.158, 0.210, 0.272, 0.360};
    for (int i = 0; i < 7; ++i) add("V", "ghz", 5, "white", rows[i], ghz[i]);
    for (int i = 0; i < 7; ++i) add("V", "cluster", 5, "white", rows[i], cluster[i]);

    add("biased", "w", 4, "biased-product", "full-sep", 0.1468);
    add("biased", "w", 4, "biased-product", "part:2", 0.58);
    return v;
  }();
  return cases;
}

std::vector<KnownCase> table_cases(const std::string& table_id) {
  std::vector<KnownCase> out;
  for (const auto& c : known_cases())
    if (c.table == table_id) out.push_back(c);
  if (out.empty()) throw std::invalid_argument("unknown table '" + table_id + "'");
  return out;
}

std::optional<double> reference_value(const RunConfig& cfg) {
  if (cfg.state_file) return std::nullopt;
  const std::string state = StateSpec::parse(cfg.state, cfg.n).name();
  const std::string noise = cfg.noise == "biased" ? "biased-product" : cfg.noise;
  const std::string structure = StructureSpec::parse(cfg.structure, cfg.n).to_string();
  for (const auto& c : known_cases()) {
    if (c.n != cfg.n || c.noise != noise) continue;
    if (StateSpec::parse(c.state, c.n).name() != state) continue;
    if (StructureSpec::parse(c.structure, c.n).to_string() != structure) continue;
    return c.t_reference;
  }
  return std::nullopt;
}

nlohmann::json verification_to_json(const VerificationReport& r) {
  nlohmann::json checks = nlohmann::json::array();
  for (const auto& c : r.checks) checks.push_back({{"name", c.name}, {"passed", c.passed}, {"detail", c.detail}});
  return {{"passed", r.passed}, {"residual", r.residual}, {"fidelity", r.fidelity}, {"checks", std::move(checks)}};
}

nlohmann::json Report::to_json() const {
  nlohmann::json comparison = nullptr;
  if (t_reference)
    comparison = {{"case", config.case_label()},
                  {"structure", config.structure},
                  {"t_reference", *t_reference},
                  {"delta", certificate.t_certified - *t_reference}};
  return {{"config", config.to_json()},
          {"t_certified", certificate.t_certified},
          {"certificate", certificate.to_json()},
          {"verification", verification_to_json(verification)},
          {"comparison", comparison},
          {"timings", {{"gd_seconds", certificate.gd_seconds}, {"sdp_seconds", certificate.sdp_seconds}}}};
}

Report run_certification(const RunConfig& cfg) {
  const DensityMatrix rho = cfg.target();
  const NoiseModel noise = cfg.noise_model(rho.layout());
  const StructureSpec spec = StructureSpec::parse(cfg.structure, rho.layout().parties());
  Report r;
  r.config = cfg;
  r.certificate = certify(rho, noise, spec, cfg.certify);
  r.verification = verify(r.certificate, rho, noise);
  r.t_reference = reference_value(cfg);
  return r;
}

int worker_count() {
  int width = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  if (const char* env = std::getenv("ENTCERT_THREADS")) {
    const int cap = std::atoi(env);
    if (cap > 0) width = std::min(width, cap);
  }
  return width;
}

std::vector<TableRow> run_table(std::span<const KnownCase> cases, const CertifyConfig& base, int epochs, int workers,
                                const std::function<void(const TableRow&, const Report*)>& on_row) {
  std::vector<TableRow> rows(cases.size());
  std::atomic<std::size_t> next{0};
  std::mutex emit;

  auto work = [&] {
    for (std::size_t i = next++; i < cases.size(); i = next++) {
      const KnownCase& kc = cases[i];
      RunConfig cfg;
      cfg.state = kc.state;
      cfg.n = kc.n;
      cfg.noise = kc.noise;
      cfg.structure = kc.structure;
      cfg.certify = base;
      const int iters = epochs > 0 ? epochs : kc.default_epochs;
      cfg.certify.gd.stage1_max_iterations = iters;
      cfg.certify.gd.stage2_max_iterations = iters;

      TableRow row{kc, std::nullopt, 0.0, 0.0, "ok"};
      std::optional<Report> report;
      try {
        report = run_certification(cfg);
        row.t_ours = report->certificate.t_certified;
        row.gd_seconds = report->certificate.gd_seconds;
        row.sdp_seconds = report->certificate.sdp_seconds;
        if (!report->verification.passed) row.status = "unverified";
      } catch (const std::exception& e) {
        row.status = e.what();
      }
      std::lock_guard lock(emit);
      rows[i] = row;
      if (on_row) on_row(row, report ? &*report : nullptr);
    }
  };

  const int width = std::clamp(workers, 1, static_cast<int>(std::max<std::size_t>(1, cases.size())));
  std::vector<std::thread> pool;
  for (int w = 1; w < width; ++w) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();
  return rows;
}

namespace {

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char c : s) {
    if (c == '"') q += '"';
    q += c == '\n' ? ' ' : c;
  }
  return q + "\"";
}

}  // namespace

void write_table_csv(std::ostream& out, std::span<const TableRow> rows, bool timings) {
  out << "case,structure,t_ours,t_paper,delta,gd_seconds,sdp_seconds,status\n";
  for (const auto& r : rows) {
    std::ostringstream line;
    line << std::setprecision(6) << std::fixed;
    line << r.known.label() << ',' << csv_field(r.known.structure) << ',';
    if (r.t_ours) line << *r.t_ours;
    line << ',' << r.known.t_reference << ',';
    if (r.t_ours) line << (*r.t_ours - r.known.t_reference);
    line << std::setprecision(2) << ',' << (timings ? r.gd_seconds : 0.0) << ',' << (timings ? r.sdp_seconds : 0.0) << ','
         << csv_field(r.status);
    out << line.str() << '\n';
  }
}

}  // namespace entcert
