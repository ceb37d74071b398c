// twr: threshold solves and sum-rate sweeps for the buffer-aided two-way relay.
//
//   twr solve --omega0-db 10 --omega2-db 0
//   twr sweep --omega0-db 10 --ratio-min 0.1 --ratio-max 10 --ratio-points 21
//   twr finite-sweep --omega0-db 10 --omega2-db 10 --caps 5,10,20,50,100,200
//
// Results go to stdout as CSV (or JSON lines with --json), diagnostics to
// stderr. A --config file of "key = value" lines supplies defaults for any
// long option not given on the command line.
//
// Exit codes: 0 success, 1 usage error, 2 numerical failure.

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "twr/experiment.hpp"

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitNumerical = 2;

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

// Parses "key = value" lines; '#' starts a comment.
std::vector<std::pair<std::string, std::string>> read_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw CLI::ValidationError("--config", "cannot open " + path);
  std::vector<std::pair<std::string, std::string>> out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    line = trim(line.substr(0, line.find('#')));
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw CLI::ValidationError("--config", path + ":" + std::to_string(lineno) + ": expected key = value");
    }
    out.emplace_back(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  return out;
}

// Appends config entries as "--key value" for options absent from argv, so
// command-line flags always win.
std::vector<std::string> merge_config(const std::vector<std::string>& args) {
  std::string path;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) path = args[i + 1];
    if (args[i].rfind("--config=", 0) == 0) path = args[i].substr(9);
  }
  if (path.empty()) return args;
  std::vector<std::string> merged = args;
  for (const auto& [key, value] : read_config(path)) {
    const std::string flag = "--" + key;
    bool given = false;
    for (const auto& a : args) given = given || a == flag || a.rfind(flag + "=", 0) == 0;
    if (!given) {
      merged.push_back(flag);
      merged.push_back(value);
    }
  }
  return merged;
}

}  // namespace

int main(int argc, char** argv) {
  using namespace twr::experiment;

  CLI::App app{"Buffer-aided two-way relay: threshold solver, simulator and sweeps", "twr"};
  app.require_subcommand(1);
  app.fallthrough();
  std::string config_path;
  bool json = false;
  app.add_option("--config", config_path, "File of key = value defaults");
  app.add_flag("--json", json, "Emit JSON lines instead of CSV");

  SweepSpec spec;
  double omega2_db = 10.0;

  auto* solve = app.add_subcommand("solve", "Solve thresholds for one SNR pair");
  solve->add_option("--omega0-db", spec.omega0_db, "Mean SNR of the U0 link, dB")->capture_default_str();
  solve->add_option("--omega2-db", omega2_db, "Mean SNR of the U2 link, dB")->capture_default_str();

  auto* sweep = app.add_subcommand("sweep", "Sum-rate sweep over the Omega2/Omega0 ratio");
  sweep->add_option("--omega0-db", spec.omega0_db, "Mean SNR of the U0 link, dB")->capture_default_str();
  sweep->add_option("--ratio-min", spec.ratio_min, "Smallest Omega2/Omega0")->capture_default_str();
  sweep->add_option("--ratio-max", spec.ratio_max, "Largest Omega2/Omega0")->capture_default_str();
  sweep->add_option("--ratio-points", spec.ratio_points, "Number of log-spaced ratios")->capture_default_str();
  sweep->add_option("--slots", spec.num_slots, "Simulated slots per point")->capture_default_str();
  sweep->add_option("--seed", spec.seed, "RNG seed")->capture_default_str();
  sweep->add_option("--threads", spec.threads, "Worker threads")->capture_default_str();

  auto* finite = app.add_subcommand("finite-sweep", "Sum-rate against the relay buffer size");
  finite->add_option("--omega0-db", spec.omega0_db, "Mean SNR of the U0 link, dB")->capture_default_str();
  finite->add_option("--omega2-db", spec.omega2_db, "Mean SNR of the U2 link, dB")->capture_default_str();
  finite->add_option("--caps", spec.buffer_caps, "Buffer caps in bits")->delimiter(',')->required();
  finite->add_option("--slots", spec.num_slots, "Simulated slots per cap")->capture_default_str();
  finite->add_option("--seed", spec.seed, "RNG seed")->capture_default_str();
  finite->add_option("--threads", spec.threads, "Worker threads")->capture_default_str();

  try {
    std::vector<std::string> args(argv + 1, argv + argc);
    args = merge_config(args);
    std::reverse(args.begin(), args.end());
    app.parse(args);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  const OutputFormat format = json ? OutputFormat::JsonLines : OutputFormat::Csv;
  RecordWriter writer(std::cout, format);
  try {
    if (*solve) {
      const double w0 = db_to_linear(spec.omega0_db);
      const double w2 = db_to_linear(omega2_db);
      if (!(w0 > 0.0) || !(w2 > 0.0) || !std::isfinite(w0) || !std::isfinite(w2)) {
        std::cerr << "error: SNRs must map to finite positive linear values\n";
        return kExitUsage;
      }
      const SolveOutcome out = solve_point(spec.omega0_db, omega2_db);
      writer.write(out.record);
      if (!out.ok) {
        std::cerr << "error: threshold solve did not converge\n";
        return kExitNumerical;
      }
      return 0;
    }
    const SweepOutcome out = *sweep ? run_sweep(spec) : run_finite_sweep(spec);
    for (const auto& r : out.records) writer.write(r);
    if (out.failures > 0) {
      std::cerr << "error: " << out.failures << " point(s) failed; see the error column\n";
      return kExitNumerical;
    }
  } catch (const twr::ArgumentError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const twr::DomainError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitNumerical;
  }
  return 0;
}
