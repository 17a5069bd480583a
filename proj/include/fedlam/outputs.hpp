#ifndef FEDLAM_OUTPUTS_HPP
#define FEDLAM_OUTPUTS_HPP

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "fedlam/errors.hpp"
#include "fedlam/orchestrator.hpp"

namespace fedlam {

inline constexpr const char* kMetricsHeader =
    "round,cumulative_latency_s,T_d,T_c,T_u,train_loss,test_accuracy,scheme,seed";

namespace detail {

inline std::string num(double v) {
  if (std::isnan(v)) return "nan";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

inline std::ofstream open_out(const std::filesystem::path& p) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw IoError("cannot open " + p.string() + " for writing");
  return out;
}

inline void finish(std::ofstream& out, const std::filesystem::path& p) {
  out.flush();
  if (!out) throw IoError("write failed for " + p.string());
}

/// JSON numbers cannot be NaN/inf; those become null.
inline nlohmann::json jnum(double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); }

}  // namespace detail

/// One CSV row per evaluated round.
inline void write_metrics_csv(std::span<const RoundRecord> records, const std::string& scheme, std::uint64_t seed,
                              const std::filesystem::path& path) {
  auto out = detail::open_out(path);
  out << kMetricsHeader << "\n";
  for (const auto& r : records) {
    if (!r.evaluated) continue;
    out << r.round << ',' << detail::num(r.cumulative_latency) << ',' << detail::num(r.latency.T_d) << ','
        << detail::num(r.latency.T_c) << ',' << detail::num(r.latency.T_u) << ',' << detail::num(r.train_loss) << ','
        << detail::num(r.test_accuracy) << ',' << scheme << ',' << seed << "\n";
  }
  detail::finish(out, path);
}

inline nlohmann::json plan_entry_json(int round, const ClientReport& c) {
  nlohmann::json layers = nlohmann::json::array();
  for (const auto& l : c.layers) {
    layers.push_back({{"name", l.name},
                      {"M", l.level},
                      {"weight", detail::jnum(l.weight)},
                      {"D_k", l.size},
                      {"step", detail::jnum(l.step)},
                      {"ber", detail::jnum(l.ber)},
                      {"predicted_error", detail::jnum(l.predicted_error)},
                      {"realized_error", detail::jnum(l.realized_error)}});
  }
  return {{"type", "plan"},
          {"round", round},
          {"client", c.client},
          {"grad_sq_sum", detail::jnum(c.grad_sq_sum)},
          {"numerator", detail::jnum(c.scored.numerator)},
          {"denominator", detail::jnum(c.scored.denominator)},
          {"score", detail::jnum(c.scored.score)},
          {"uplink_s", detail::jnum(c.scored.uplink)},
          {"layers", layers}};
}

inline nlohmann::json importance_entry_json(int round, const LayerImportance& imp) {
  nlohmann::json eig = nlohmann::json::array(), w = nlohmann::json::array();
  for (double e : imp.eigenvalues) eig.push_back(detail::jnum(e));
  for (double x : imp.weights) w.push_back(detail::jnum(x));
  return {{"type", "importance"}, {"round", round}, {"eigenvalues", eig}, {"weights", w}};
}

/// Plan log: one "plan" object per client per round, plus an "importance"
/// object on every round that refreshed the layer weights.
inline void write_plan_log(std::span<const RoundRecord> records, const std::filesystem::path& path) {
  auto out = detail::open_out(path);
  for (const auto& r : records) {
    if (r.importance) out << importance_entry_json(r.round, *r.importance).dump() << "\n";
    for (const auto& c : r.clients) out << plan_entry_json(r.round, c).dump() << "\n";
  }
  detail::finish(out, path);
}

/// Returns an empty string when `line` is a well-formed plan-log record,
/// otherwise a description of the first problem found.
inline std::string validate_plan_log_line(const std::string& line) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    return std::string("not JSON: ") + e.what();
  }
  auto is_num = [](const nlohmann::json& v) { return v.is_number() || v.is_null(); };
  if (!j.is_object() || !j.contains("type") || !j["type"].is_string()) return "missing type";
  if (!j.contains("round") || !j["round"].is_number_integer()) return "missing round";
  const std::string type = j["type"];
  if (type == "importance") {
    if (!j.contains("eigenvalues") || !j["eigenvalues"].is_array()) return "missing eigenvalues";
    if (!j.contains("weights") || !j["weights"].is_array()) return "missing weights";
    if (j["weights"].size() != j["eigenvalues"].size()) return "weights/eigenvalues length mismatch";
    return {};
  }
  if (type != "plan") return "unknown type " + type;
  if (!j.contains("client") || !j["client"].is_number_integer()) return "missing client";
  for (const char* k : {"grad_sq_sum", "numerator", "denominator", "score", "uplink_s"}) {
    if (!j.contains(k) || !is_num(j[k])) return std::string("missing ") + k;
  }
  if (!j.contains("layers") || !j["layers"].is_array() || j["layers"].empty()) return "missing layers";
  for (const auto& l : j["layers"]) {
    if (!l.contains("name") || !l["name"].is_string()) return "layer without name";
    if (!l.contains("M") || !l["M"].is_number_integer()) return "layer without M";
    if (!l.contains("D_k") || !l["D_k"].is_number_integer()) return "layer without D_k";
    for (const char* k : {"weight", "step", "ber", "predicted_error", "realized_error"}) {
      if (!l.contains(k) || !is_num(l[k])) return std::string("layer without ") + k;
    }
  }
  return {};
}

struct SummaryRow {
  std::string scheme;
  bool reached = false;
  double latency_to_target = 0.0;
  int rounds_to_target = -1;
  double final_accuracy = 0.0;
};

inline SummaryRow summarize(const std::string& scheme, const ExperimentResult& res) {
  SummaryRow row;
  row.scheme = scheme;
  row.reached = res.reached_target;
  row.latency_to_target = res.latency_to_target;
  row.rounds_to_target = res.rounds_to_target;
  row.final_accuracy = res.initial_accuracy;
  for (const auto& r : res.records) {
    if (r.evaluated) row.final_accuracy = r.test_accuracy;
  }
  return row;
}

inline std::string scheme_label(const std::string& scheme) {
  if (scheme == "am") return "AM";
  if (scheme == "layerwise") return "Proposed";
  if (scheme.rfind("fixed", 0) == 0) return scheme.substr(5) + "PSK";
  if (scheme.rfind("grouped", 0) == 0) return "Proposed (g=" + scheme.substr(7) + ")";
  return scheme;
}

/// Latency-to-target table, one row per scheme plus the saving of the
/// layer-wise scheme over AM when both reached the target.
inline std::string format_summary(std::span<const SummaryRow> rows, const std::string& dataset, double target) {
  char head[96];
  std::snprintf(head, sizeof head, "%s Acc.=%.1f%%", dataset.c_str(), 100.0 * target);
  std::string out = "Summary of Experimental Results (cumulative latency to reach the target accuracy)\n\n";
  char line[160];
  std::snprintf(line, sizeof line, "| %-16s | %-24s | %-8s | %-9s |\n", "", head, "rounds", "final acc");
  out += line;
  out += "|------------------|--------------------------|----------|-----------|\n";
  const SummaryRow* am = nullptr;
  const SummaryRow* prop = nullptr;
  for (const auto& r : rows) {
    if (r.scheme == "am") am = &r;
    if (r.scheme == "layerwise") prop = &r;
    char cell[32] = "not reached";
    char rounds[16] = "-";
    if (r.reached) {
      std::snprintf(cell, sizeof cell, "%.4gs", r.latency_to_target);
      std::snprintf(rounds, sizeof rounds, "%d", r.rounds_to_target);
    }
    std::snprintf(line, sizeof line, "| %-16s | %-24s | %-8s | %8.2f%% |\n", scheme_label(r.scheme).c_str(), cell,
                  rounds, 100.0 * r.final_accuracy);
    out += line;
  }
  if (am != nullptr && prop != nullptr) {
    char cell[32] = "n/a";
    if (am->reached && prop->reached && am->latency_to_target > 0.0) {
      std::snprintf(cell, sizeof cell, "%.1f%%", 100.0 * (1.0 - prop->latency_to_target / am->latency_to_target));
    }
    std::snprintf(line, sizeof line, "| %-16s | %-24s | %-8s | %-9s |\n", "Saving", cell, "", "");
    out += line;
  }
  return out;
}

inline std::string dataset_label(const ExperimentConfig& cfg) {
  return cfg.dataset.kind == "mnist-idx" ? "MNIST" : "Synthetic";
}

inline void write_summary(std::span<const SummaryRow> rows, const std::string& dataset, double target,
                          const std::filesystem::path& path) {
  auto out = detail::open_out(path);
  out << format_summary(rows, dataset, target);
  detail::finish(out, path);
}

/// metrics.csv, plans.jsonl and summary.txt for a single run.
inline void write_outputs(const ExperimentResult& res, const ExperimentConfig& cfg, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory " + dir.string() + ": " + ec.message());
  const std::string scheme = cfg.scheme.to_string();
  write_metrics_csv(res.records, scheme, cfg.seed, dir / "metrics.csv");
  write_plan_log(res.records, dir / "plans.jsonl");
  const SummaryRow row = summarize(scheme, res);
  write_summary(std::span<const SummaryRow>(&row, 1), dataset_label(cfg), cfg.target_accuracy, dir / "summary.txt");
}

}  // namespace fedlam

#endif  // FEDLAM_OUTPUTS_HPP
