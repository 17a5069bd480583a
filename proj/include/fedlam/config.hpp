#ifndef FEDLAM_CONFIG_HPP
#define FEDLAM_CONFIG_HPP

#include <cstddef>
#include <cstdint>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <utility>

#include "json.hpp"

#include "fedlam/dataset.hpp"
#include "fedlam/errors.hpp"
#include "fedlam/idx.hpp"
#include "fedlam/orchestrator.hpp"

namespace fedlam {

namespace detail {

/// Reads fields out of one JSON object, remembering which keys were used so
/// leftovers can be rejected by name.
class ObjectReader {
 public:
  ObjectReader(const nlohmann::json& obj, std::string path) : obj_(obj), path_(std::move(path)) {
    if (!obj_.is_object()) throw ConfigError(where("") + " must be an object");
  }

  template <typename T>
  void read(const char* key, T& dst) {
    seen_.insert(key);
    const auto it = obj_.find(key);
    if (it == obj_.end()) return;
    try {
      check_type<T>(*it, key);
      dst = it->template get<T>();
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError(where(key) + ": " + e.what());
    }
  }

  ObjectReader child(const char* key) {
    seen_.insert(key);
    const auto it = obj_.find(key);
    static const nlohmann::json kEmpty = nlohmann::json::object();
    if (it == obj_.end()) return ObjectReader(kEmpty, where(key));
    return ObjectReader(*it, where(key));
  }

  void reject_unknown() const {
    for (const auto& [k, v] : obj_.items()) {
      if (!seen_.count(k)) throw ConfigError("unknown config key '" + where(k) + "'");
    }
  }

 private:
  template <typename T>
  void check_type(const nlohmann::json& v, const char* key) const {
    bool ok = true;
    if constexpr (std::is_same_v<T, bool>) {
      ok = v.is_boolean();
    } else if constexpr (std::is_same_v<T, std::string>) {
      ok = v.is_string();
    } else if constexpr (std::is_floating_point_v<T>) {
      ok = v.is_number();
    } else if constexpr (std::is_unsigned_v<T>) {
      ok = v.is_number_unsigned() || (v.is_number_integer() && v.template get<long long>() >= 0);
    } else if constexpr (std::is_integral_v<T>) {
      ok = v.is_number_integer();
    } else {
      ok = v.is_array();
      if (ok) {
        for (const auto& e : v) ok = ok && e.is_number_integer();
      }
    }
    if (!ok) throw ConfigError("invalid value for config key '" + where(key) + "'");
  }

  std::string where(const std::string& key) const {
    if (path_.empty()) return key;
    return key.empty() ? path_ : path_ + "." + key;
  }

  const nlohmann::json& obj_;
  std::string path_;
  std::set<std::string> seen_;
};

}  // namespace detail

inline ExperimentConfig parse_config(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  ExperimentConfig c;
  detail::ObjectReader top(j, "");
  top.read("rounds", c.rounds);
  top.read("seed", c.seed);
  top.read("model", c.model);
  std::string scheme = c.scheme.to_string();
  top.read("scheme", scheme);
  c.scheme = Scheme::parse(scheme);
  top.read("n_clients", c.hp.n_clients);
  top.read("eval_every", c.eval_every);
  top.read("target_accuracy", c.target_accuracy);
  top.read("importance_period", c.importance_period);
  top.read("importance_batch", c.importance_batch);
  top.read("enumeration_limit", c.enumeration_limit);
  top.read("fallback_groups", c.fallback_groups);
  top.read("train_eval_samples", c.train_eval_samples);
  top.read("deterministic", c.deterministic);
  top.read("threads", c.threads);

  auto hp = top.child("hp");
  hp.read("eta", c.hp.eta);
  hp.read("tau", c.hp.tau);
  hp.read("L_smooth", c.hp.L_smooth);
  hp.read("sigma_sq", c.hp.sigma_sq);
  hp.read("batch_size", c.hp.batch_size);
  hp.reject_unknown();

  auto ch = top.child("channel");
  ch.read("es_n0", c.channel.es_n0);
  ch.read("B_u", c.channel.B_u);
  ch.read("B_d", c.channel.B_d);
  ch.read("N_bits", c.channel.N_bits);
  ch.read("candidate_levels", c.channel.candidate_levels);
  ch.read("exact_uplink", c.channel.exact_uplink);
  ch.read("force_zero_ber", c.channel.force_zero_ber);
  ch.reject_unknown();

  auto cc = top.child("compute");
  cc.read("V", c.compute.V);
  cc.read("C", c.compute.C);
  cc.read("f", c.compute.f_clock);
  cc.reject_unknown();

  auto ds = top.child("dataset");
  ds.read("kind", c.dataset.kind);
  ds.read("train_images", c.dataset.train_images);
  ds.read("train_labels", c.dataset.train_labels);
  ds.read("test_images", c.dataset.test_images);
  ds.read("test_labels", c.dataset.test_labels);
  ds.read("train_samples", c.dataset.train_samples);
  ds.read("test_samples", c.dataset.test_samples);
  ds.read("dims", c.dataset.dims);
  ds.read("classes", c.dataset.classes);
  ds.read("margin", c.dataset.margin);
  ds.read("noise", c.dataset.noise);
  ds.read("data_seed", c.dataset.data_seed);
  ds.reject_unknown();
  if (c.dataset.kind != "synthetic" && c.dataset.kind != "mnist-idx") {
    throw ConfigError("invalid value for config key 'dataset.kind' (expected synthetic or mnist-idx)");
  }

  auto pw = top.child("power");
  pw.read("tol", c.power.tol);
  pw.read("max_iters", c.power.max_iters);
  pw.read("hvp_scale", c.power.hvp_scale);
  pw.reject_unknown();

  top.reject_unknown();
  c.validate();
  return c;
}

inline nlohmann::json to_json(const ExperimentConfig& c) {
  nlohmann::json j;
  j["rounds"] = c.rounds;
  j["seed"] = c.seed;
  j["model"] = c.model;
  j["scheme"] = c.scheme.to_string();
  j["n_clients"] = c.hp.n_clients;
  j["eval_every"] = c.eval_every;
  j["target_accuracy"] = c.target_accuracy;
  j["importance_period"] = c.importance_period;
  j["importance_batch"] = c.importance_batch;
  j["enumeration_limit"] = c.enumeration_limit;
  j["fallback_groups"] = c.fallback_groups;
  j["train_eval_samples"] = c.train_eval_samples;
  j["deterministic"] = c.deterministic;
  j["threads"] = c.threads;
  j["hp"] = {{"eta", c.hp.eta},
             {"tau", c.hp.tau},
             {"L_smooth", c.hp.L_smooth},
             {"sigma_sq", c.hp.sigma_sq},
             {"batch_size", c.hp.batch_size}};
  j["channel"] = {{"es_n0", c.channel.es_n0},
                  {"B_u", c.channel.B_u},
                  {"B_d", c.channel.B_d},
                  {"N_bits", c.channel.N_bits},
                  {"candidate_levels", c.channel.candidate_levels},
                  {"exact_uplink", c.channel.exact_uplink},
                  {"force_zero_ber", c.channel.force_zero_ber}};
  j["compute"] = {{"V", c.compute.V}, {"C", c.compute.C}, {"f", c.compute.f_clock}};
  j["dataset"] = {{"kind", c.dataset.kind},
                  {"train_images", c.dataset.train_images},
                  {"train_labels", c.dataset.train_labels},
                  {"test_images", c.dataset.test_images},
                  {"test_labels", c.dataset.test_labels},
                  {"train_samples", c.dataset.train_samples},
                  {"test_samples", c.dataset.test_samples},
                  {"dims", c.dataset.dims},
                  {"classes", c.dataset.classes},
                  {"margin", c.dataset.margin},
                  {"noise", c.dataset.noise},
                  {"data_seed", c.dataset.data_seed}};
  j["power"] = {{"tol", c.power.tol}, {"max_iters", c.power.max_iters}, {"hvp_scale", c.power.hvp_scale}};
  return j;
}

/// Canonical text: every key present, sorted, two-space indent.
inline std::string serialize_config(const ExperimentConfig& c) { return to_json(c).dump(2) + "\n"; }

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

struct TrainTest {
  Dataset train;
  Dataset test;
};

/// Materialises the dataset a config describes.
inline TrainTest load_data(const DatasetSpec& spec) {
  TrainTest out;
  if (spec.kind == "mnist-idx") {
    out.train = load_mnist_idx(spec.train_images, spec.train_labels);
    out.test = load_mnist_idx(spec.test_images, spec.test_labels);
    if (spec.train_samples > 0 && spec.train_samples < out.train.size()) {
      IndexList keep(spec.train_samples);
      for (std::size_t i = 0; i < keep.size(); ++i) keep[i] = i;
      out.train = subset(out.train, keep);
    }
    if (spec.test_samples > 0 && spec.test_samples < out.test.size()) {
      IndexList keep(spec.test_samples);
      for (std::size_t i = 0; i < keep.size(); ++i) keep[i] = i;
      out.test = subset(out.test, keep);
    }
    return out;
  }
  SyntheticSpec s;
  s.classes = spec.classes;
  s.dims = spec.dims;
  s.margin = spec.margin;
  s.noise = spec.noise;
  s.n = spec.train_samples + spec.test_samples;
  s.seed = spec.data_seed;
  Dataset all = gen_synthetic(s);
  IndexList tr(spec.train_samples), te(spec.test_samples);
  for (std::size_t i = 0; i < tr.size(); ++i) tr[i] = i;
  for (std::size_t i = 0; i < te.size(); ++i) te[i] = spec.train_samples + i;
  out.train = subset(all, tr);
  out.test = subset(all, te);
  return out;
}

}  // namespace fedlam

#endif  // FEDLAM_CONFIG_HPP
