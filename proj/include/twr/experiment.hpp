#pragma once

// Experiment drivers behind the command-line tool: single-point solves,
// sum-rate sweeps over the SNR ratio, and buffer-size sweeps. Output is CSV
// (fixed column order) or JSON lines with the same keys.

#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <optional>
#include <ostream>
#include <string>
#include <thread>
#include <variant>
#include <vector>

#include "json.hpp"
#include "twr/baseline.hpp"
#include "twr/simulator.hpp"
#include "twr/solver.hpp"

namespace twr::experiment {

inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }
inline double linear_to_db(double linear) { return 10.0 * std::log10(linear); }

struct SweepSpec {
  double omega0_db = 10.0;
  double ratio_min = 0.1;
  double ratio_max = 10.0;
  int ratio_points = 21;
  std::int64_t num_slots = 1'000'000;
  std::uint64_t seed = 1;
  /// Finite-buffer sweeps only: the fixed Omega2 and the caps to visit.
  double omega2_db = 10.0;
  std::vector<double> buffer_caps;
  int threads = 1;

  void validate() const {
    if (!std::isfinite(db_to_linear(omega0_db)) || !(db_to_linear(omega0_db) > 0.0)) {
      throw ArgumentError("omega0 must be a finite positive SNR");
    }
    if (!(ratio_min > 0.0) || !(ratio_max >= ratio_min) || !std::isfinite(ratio_max)) {
      throw ArgumentError("ratio bounds must satisfy 0 < ratio_min <= ratio_max");
    }
    if (ratio_points < 1) throw ArgumentError("ratio_points must be at least 1");
    if (num_slots < 1) throw ArgumentError("num_slots must be at least 1");
    for (double cap : buffer_caps) {
      if (!(cap >= 0.0)) throw ArgumentError("buffer caps must be non-negative");
    }
  }

  /// Log-spaced Omega2/Omega0 grid from ratio_min to ratio_max inclusive.
  std::vector<double> ratios() const {
    std::vector<double> out;
    if (ratio_points == 1) return {ratio_min};
    const double span = std::log(ratio_max / ratio_min);
    for (int i = 0; i < ratio_points; ++i) {
      out.push_back(ratio_min * std::exp(span * i / (ratio_points - 1)));
    }
    out.back() = ratio_max;
    return out;
  }
};

/// One output field. Missing numeric values (failed points) print as "nan".
using Field = std::variant<double, std::int64_t, std::uint64_t, std::string>;

struct Record {
  std::vector<std::pair<std::string, Field>> fields;

  void add(std::string key, Field value) { fields.emplace_back(std::move(key), std::move(value)); }
};

inline std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

inline std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += (c == '\n') ? ' ' : c;
  }
  return out + "\"";
}

inline std::string field_text(const Field& f) {
  return std::visit(
      [](const auto& v) -> std::string {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, double>) {
          return format_number(v);
        } else if constexpr (std::is_same_v<T, std::string>) {
          return csv_escape(v);
        } else {
          return std::to_string(v);
        }
      },
      f);
}

enum class OutputFormat { Csv, JsonLines };

/// Writes records to a stream, emitting the CSV header before the first row.
class RecordWriter {
 public:
  RecordWriter(std::ostream& out, OutputFormat format) : out_(out), format_(format) {}

  void write(const Record& r) {
    if (format_ == OutputFormat::JsonLines) {
      nlohmann::ordered_json j;
      for (const auto& [key, value] : r.fields) {
        std::visit(
            [&](const auto& v) {
              using T = std::decay_t<decltype(v)>;
              if constexpr (std::is_same_v<T, double>) {
                // JSON has no nan/inf; failed or unlimited values become null.
                if (std::isfinite(v)) {
                  j[key] = v;
                } else {
                  j[key] = nullptr;
                }
              } else {
                j[key] = v;
              }
            },
            value);
      }
      out_ << j.dump() << '\n';
      return;
    }
    if (!header_written_) {
      for (std::size_t i = 0; i < r.fields.size(); ++i) out_ << (i ? "," : "") << r.fields[i].first;
      out_ << '\n';
      header_written_ = true;
    }
    for (std::size_t i = 0; i < r.fields.size(); ++i) out_ << (i ? "," : "") << field_text(r.fields[i].second);
    out_ << '\n';
  }

 private:
  std::ostream& out_;
  OutputFormat format_;
  bool header_written_ = false;
};

inline const std::vector<std::string>& sweep_columns() {
  static const std::vector<std::string> cols = {"omega0_db", "omega2_db",      "ratio", "lambda", "mu",
                                                "h1",        "h2",             "rate_theory", "rate_sim",
                                                "rate_reference", "t0",        "t1",    "t2",     "seed",
                                                "n_slots",   "error"};
  return cols;
}

inline const std::vector<std::string>& finite_sweep_columns() {
  static const std::vector<std::string> cols = {"omega0_db", "omega2_db", "buffer_cap_bits", "rate_sim_finite",
                                                "rate_sim_unlimited", "mean_q0", "mean_q2", "seed", "n_slots",
                                                "error"};
  return cols;
}

/// Evaluates fn(0..n-1) on up to `threads` workers; results keep index order.
template <typename Result>
std::vector<Result> parallel_map(std::size_t n, int threads, const std::function<Result(std::size_t)>& fn) {
  std::vector<Result> out(n);
  const std::size_t workers = std::min<std::size_t>(n, static_cast<std::size_t>(std::max(threads, 1)));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) out[i] = fn(i);
    return out;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) out[i] = fn(i);
    });
  }
  for (auto& t : pool) t.join();
  return out;
}

struct SolveOutcome {
  Record record;
  bool ok = true;
};

/// Solves one (Omega0, Omega2) point and pairs it with the reference optimum.
inline SolveOutcome solve_point(double omega0_db, double omega2_db, const SolverOptions& options = {}) {
  const ChannelConfig channel{db_to_linear(omega0_db), db_to_linear(omega2_db), 0};
  channel.validate();
  SolveOutcome out;
  SolverResult r;
  std::string error;
  try {
    r = solve_thresholds(channel, options);
  } catch (const SolverFailure& e) {
    r = e.best();
    error = e.what();
    out.ok = false;
  }
  const ReferenceResult ref = reference_optimum(channel.omega0, channel.omega2);
  Record& rec = out.record;
  rec.add("omega0_db", omega0_db);
  rec.add("omega2_db", omega2_db);
  rec.add("lambda", r.thresholds.lambda);
  rec.add("mu", r.thresholds.mu);
  rec.add("h1", r.residuals.h1);
  rec.add("h2", r.residuals.h2);
  rec.add("rate_theory", r.theoretical_sum_rate);
  rec.add("rate_reference", ref.sum_rate);
  rec.add("iterations", static_cast<std::int64_t>(r.iterations));
  rec.add("converged", std::string(r.converged ? "true" : "false"));
  rec.add("error", error);
  return out;
}

struct SweepOutcome {
  std::vector<Record> records;
  int failures = 0;
};

/// One row per ratio point: solve, theory, simulation and reference.
inline SweepOutcome run_sweep(const SweepSpec& spec, const SolverOptions& options = {}) {
  spec.validate();
  const std::vector<double> ratios = spec.ratios();
  struct Row {
    Record record;
    bool ok = true;
  };
  auto rows = parallel_map<Row>(ratios.size(), spec.threads, [&](std::size_t i) {
    const double ratio = ratios[i];
    const double omega0 = db_to_linear(spec.omega0_db);
    const double omega2 = omega0 * ratio;
    const ChannelConfig channel{omega0, omega2, spec.seed};
    const ReferenceResult ref = reference_optimum(omega0, omega2);

    double nan = std::nan("");
    Thresholds t{nan, nan};
    ResidualPair h{nan, nan};
    double theory = nan, sim = nan;
    std::string error;
    try {
      const SolverResult solved = solve_thresholds(channel, options);
      t = solved.thresholds;
      h = solved.residuals;
      theory = solved.theoretical_sum_rate;
      sim = run(SimConfig{channel, t, spec.num_slots, std::nullopt}).sum_rate;
    } catch (const std::exception& e) {
      error = e.what();
    }

    Row row;
    row.ok = error.empty();
    Record& r = row.record;
    r.add("omega0_db", spec.omega0_db);
    r.add("omega2_db", linear_to_db(omega2));
    r.add("ratio", ratio);
    r.add("lambda", t.lambda);
    r.add("mu", t.mu);
    r.add("h1", h.h1);
    r.add("h2", h.h2);
    r.add("rate_theory", theory);
    r.add("rate_sim", sim);
    r.add("rate_reference", ref.sum_rate);
    r.add("t0", ref.t0_frac);
    r.add("t1", ref.t1_frac);
    r.add("t2", ref.t2_frac);
    r.add("seed", spec.seed);
    r.add("n_slots", spec.num_slots);
    r.add("error", error);
    return row;
  });

  SweepOutcome out;
  for (auto& row : rows) {
    if (!row.ok) ++out.failures;
    out.records.push_back(std::move(row.record));
  }
  return out;
}

/// Buffer-size sweep at fixed (Omega0, Omega2). Thresholds come from the
/// unlimited-buffer solve; every run shares the seed, and the final row is the
/// unlimited-buffer run itself.
inline SweepOutcome run_finite_sweep(const SweepSpec& spec, const SolverOptions& options = {}) {
  spec.validate();
  const double omega0 = db_to_linear(spec.omega0_db);
  const double omega2 = db_to_linear(spec.omega2_db);
  const ChannelConfig channel{omega0, omega2, spec.seed};
  channel.validate();

  SweepOutcome out;
  std::optional<Thresholds> thresholds;
  std::string solve_error;
  try {
    thresholds = solve_thresholds(channel, options).thresholds;
  } catch (const std::exception& e) {
    solve_error = e.what();
  }

  std::vector<std::optional<double>> caps(spec.buffer_caps.begin(), spec.buffer_caps.end());
  caps.push_back(std::nullopt);
  const double nan = std::nan("");
  auto reports = parallel_map<std::optional<SimReport>>(caps.size(), spec.threads, [&](std::size_t i) {
    if (!thresholds) return std::optional<SimReport>{};
    return std::optional<SimReport>{run(SimConfig{channel, *thresholds, spec.num_slots, caps[i]})};
  });
  const double unlimited_rate = reports.back() ? reports.back()->sum_rate : nan;

  for (std::size_t i = 0; i < caps.size(); ++i) {
    const auto& rep = reports[i];
    Record r;
    r.add("omega0_db", spec.omega0_db);
    r.add("omega2_db", spec.omega2_db);
    r.add("buffer_cap_bits", caps[i] ? *caps[i] : kUnlimitedBuffer);
    r.add("rate_sim_finite", rep ? rep->sum_rate : nan);
    r.add("rate_sim_unlimited", unlimited_rate);
    r.add("mean_q0", rep ? rep->mean_q0 : nan);
    r.add("mean_q2", rep ? rep->mean_q2 : nan);
    r.add("seed", spec.seed);
    r.add("n_slots", spec.num_slots);
    r.add("error", solve_error);
    if (!rep) ++out.failures;
    out.records.push_back(std::move(r));
  }
  return out;
}

}  // namespace twr::experiment
