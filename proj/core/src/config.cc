// Copyright 2026 The dncalign Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
#include "dnc/config.h"

#include <fstream>
#include <set>
#include <sstream>
#include <string>

#include "dnc/errors.h"

namespace dnc {
namespace {

using nlohmann::json;

json ModalitiesToJson(const std::vector<GenModality>& modalities) {
  json out = json::array();
  for (const GenModality& m : modalities) {
    out.push_back({{"name", m.name}, {"dim", m.dim}});
  }
  return out;
}

// Reads an object section, rejecting keys it does not know.
class Section {
 public:
  Section(const json& j, std::string path) : json_(j), path_(std::move(path)) {
    if (!json_.is_object()) throw ConfigError(path_ + " must be an object");
  }

  ~Section() noexcept(false) {
    if (std::uncaught_exceptions() > 0) return;
    for (auto it = json_.begin(); it != json_.end(); ++it) {
      if (!seen_.count(it.key())) {
        throw ConfigError("unknown config key '" + Key(it.key()) + "'");
      }
    }
  }

  template <typename T>
  void Read(const char* key, T& out) {
    seen_.insert(key);
    auto it = json_.find(key);
    if (it == json_.end()) return;
    try {
      if constexpr (std::is_same_v<T, bool>) {
        if (!it->is_boolean()) throw ConfigError("");
      } else if constexpr (std::is_integral_v<T>) {
        if (!it->is_number_integer()) throw ConfigError("");
      } else if constexpr (std::is_floating_point_v<T>) {
        if (!it->is_number()) throw ConfigError("");
      } else {
        if (!it->is_string()) throw ConfigError("");
      }
      out = it->get<T>();
    } catch (const std::exception&) {
      throw ConfigError("config key '" + Key(key) + "' has the wrong type");
    }
  }

  const json* Child(const char* key) {
    seen_.insert(key);
    auto it = json_.find(key);
    return it == json_.end() ? nullptr : &*it;
  }

  std::string Key(const std::string& key) const {
    return path_.empty() ? key : path_ + "." + key;
  }

 private:
  const json& json_;
  std::string path_;
  std::set<std::string> seen_;
};

void Validate(const ExperimentConfig& c) {
  auto require = [](bool ok, const std::string& what) {
    if (!ok) throw ConfigError(what);
  };
  require(c.model.embed_dim >= 1, "model.embed_dim must be positive");
  require(c.model.tau > 0.0, "model.tau must be positive");
  require(c.model.balance >= 0.0 && c.model.balance <= 1.0,
          "model.balance must lie in [0, 1]");
  require(c.objective.lambda >= 0.0, "objective.lambda must be >= 0");
  require(c.objective.beta >= 0.0 && c.objective.beta <= 1.0,
          "objective.beta must lie in [0, 1]");
  require(c.objective.epochs >= 0, "objective.epochs must be >= 0");
  require(c.objective.warmup_epochs >= 0, "objective.warmup_epochs must be >= 0");
  require(c.objective.lr > 0.0, "objective.lr must be positive");
  require(c.objective.batch_size >= 1, "objective.batch_size must be positive");
  require(c.ttr.k >= 1, "ttr.k must be positive");
  require(c.ttr.max_retries >= 0, "ttr.max_retries must be >= 0");
  require(c.ttr.parallelism >= 1, "ttr.parallelism must be positive");
  require(c.ttr.backend == "mock" || c.ttr.backend == "http" ||
              c.ttr.backend == "replay",
          "ttr.backend must be one of mock, http, replay");
  require(c.ttr.mode == "non_name" || c.ttr.mode == "all_attributes",
          "ttr.mode must be non_name or all_attributes");
  require(c.ttr.mock_error_rate >= 0.0 && c.ttr.mock_error_rate <= 1.0,
          "ttr.mock_error_rate must lie in [0, 1]");
  require(!(c.ablation.only_unc && c.ablation.only_cons),
          "ablation.only_unc and ablation.only_cons are exclusive");
  for (double r : {c.data.noise.ee, c.data.noise.ea, c.data.noise.aa}) {
    require(r >= 0.0 && r <= 1.0, "noise ratios must lie in [0, 1]");
  }
}

}  // namespace

bool ExperimentConfig::operator==(const ExperimentConfig& other) const {
  return ToJson(*this) == ToJson(other);
}

DivisionMode DivisionModeFor(const AblationConfig& ablation) {
  if (!ablation.drl) return DivisionMode::kNone;
  if (ablation.only_unc) return DivisionMode::kUncertaintyOnly;
  if (ablation.only_cons) return DivisionMode::kConsensusOnly;
  return DivisionMode::kFull;
}

json ToJson(const ExperimentConfig& c) {
  const GenConfig& g = c.data.gen;
  return {
      {"seed", c.seed},
      {"data",
       {{"n", g.n},
        {"latent_dim", g.latent_dim},
        {"clusters", g.clusters},
        {"cluster_spread", g.cluster_spread},
        {"modalities", ModalitiesToJson(g.modalities)},
        {"view_noise", g.view_noise},
        {"side_distortion", g.side_distortion},
        {"neighbors", g.neighbors},
        {"relations", g.relations},
        {"edge_drop", g.edge_drop},
        {"missing_rate", g.missing_rate},
        {"train_ratio", g.train_ratio},
        {"noise",
         {{"ee", c.data.noise.ee}, {"ea", c.data.noise.ea},
          {"aa", c.data.noise.aa}}},
        {"aa_feature_scale", c.data.inject.aa_feature_scale},
        {"aa_char_rate", c.data.inject.aa_char_rate}}},
      {"model",
       {{"embed_dim", c.model.embed_dim},
        {"tau", c.model.tau},
        {"balance", c.model.balance}}},
      {"objective",
       {{"lambda", c.objective.lambda},
        {"beta", c.objective.beta},
        {"variant", std::string(LossVariantName(c.objective.variant))},
        {"warmup_epochs", c.objective.warmup_epochs},
        {"epochs", c.objective.epochs},
        {"lr", c.objective.lr},
        {"batch_size", c.objective.batch_size}}},
      {"ttr",
       {{"enabled", c.ttr.enabled},
        {"backend", c.ttr.backend},
        {"k", c.ttr.k},
        {"skip_threshold", c.ttr.skip_threshold},
        {"max_retries", c.ttr.max_retries},
        {"parallelism", c.ttr.parallelism},
        {"mode", c.ttr.mode},
        {"mock_error_rate", c.ttr.mock_error_rate},
        {"endpoint", c.ttr.endpoint},
        {"path", c.ttr.path},
        {"model", c.ttr.model},
        {"token_env", c.ttr.token_env},
        {"replay_log", c.ttr.replay_log},
        {"timeout_seconds", c.ttr.timeout_seconds},
        {"backoff_initial_seconds", c.ttr.backoff_initial_seconds},
        {"backoff_max_seconds", c.ttr.backoff_max_seconds}}},
      {"ablation",
       {{"drl", c.ablation.drl},
        {"drf", c.ablation.drf},
        {"ttr", c.ablation.ttr},
        {"only_unc", c.ablation.only_unc},
        {"only_cons", c.ablation.only_cons}}},
      {"eval", {{"bidirectional", c.eval.bidirectional}}},
  };
}

ExperimentConfig ConfigFromJson(const json& j) {
  ExperimentConfig c;
  {
    Section root(j, "");
    root.Read("seed", c.seed);
    if (const json* data = root.Child("data")) {
      Section s(*data, "data");
      GenConfig& g = c.data.gen;
      s.Read("n", g.n);
      s.Read("latent_dim", g.latent_dim);
      s.Read("clusters", g.clusters);
      s.Read("cluster_spread", g.cluster_spread);
      s.Read("view_noise", g.view_noise);
      s.Read("side_distortion", g.side_distortion);
      s.Read("neighbors", g.neighbors);
      s.Read("relations", g.relations);
      s.Read("edge_drop", g.edge_drop);
      s.Read("missing_rate", g.missing_rate);
      s.Read("train_ratio", g.train_ratio);
      s.Read("aa_feature_scale", c.data.inject.aa_feature_scale);
      s.Read("aa_char_rate", c.data.inject.aa_char_rate);
      if (const json* mods = s.Child("modalities")) {
        if (!mods->is_array() || mods->empty()) {
          throw ConfigError("data.modalities must be a non-empty array");
        }
        g.modalities.clear();
        for (const json& m : *mods) {
          GenModality spec;
          Section ms(m, "data.modalities[]");
          ms.Read("name", spec.name);
          ms.Read("dim", spec.dim);
          if (spec.name.empty()) throw ConfigError("modality without a name");
          g.modalities.push_back(spec);
        }
      }
      if (const json* noise = s.Child("noise")) {
        Section ns(*noise, "data.noise");
        ns.Read("ee", c.data.noise.ee);
        ns.Read("ea", c.data.noise.ea);
        ns.Read("aa", c.data.noise.aa);
      }
    }
    if (const json* model = root.Child("model")) {
      Section s(*model, "model");
      s.Read("embed_dim", c.model.embed_dim);
      s.Read("tau", c.model.tau);
      s.Read("balance", c.model.balance);
    }
    if (const json* obj = root.Child("objective")) {
      Section s(*obj, "objective");
      s.Read("lambda", c.objective.lambda);
      s.Read("beta", c.objective.beta);
      std::string variant(LossVariantName(c.objective.variant));
      s.Read("variant", variant);
      try {
        c.objective.variant = ParseLossVariant(variant);
      } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
      }
      s.Read("warmup_epochs", c.objective.warmup_epochs);
      s.Read("epochs", c.objective.epochs);
      s.Read("lr", c.objective.lr);
      s.Read("batch_size", c.objective.batch_size);
    }
    if (const json* ttr = root.Child("ttr")) {
      Section s(*ttr, "ttr");
      s.Read("enabled", c.ttr.enabled);
      s.Read("backend", c.ttr.backend);
      s.Read("k", c.ttr.k);
      s.Read("skip_threshold", c.ttr.skip_threshold);
      s.Read("max_retries", c.ttr.max_retries);
      s.Read("parallelism", c.ttr.parallelism);
      s.Read("mode", c.ttr.mode);
      s.Read("mock_error_rate", c.ttr.mock_error_rate);
      s.Read("endpoint", c.ttr.endpoint);
      s.Read("path", c.ttr.path);
      s.Read("model", c.ttr.model);
      s.Read("token_env", c.ttr.token_env);
      s.Read("replay_log", c.ttr.replay_log);
      s.Read("timeout_seconds", c.ttr.timeout_seconds);
      s.Read("backoff_initial_seconds", c.ttr.backoff_initial_seconds);
      s.Read("backoff_max_seconds", c.ttr.backoff_max_seconds);
    }
    if (const json* abl = root.Child("ablation")) {
      Section s(*abl, "ablation");
      s.Read("drl", c.ablation.drl);
      s.Read("drf", c.ablation.drf);
      s.Read("ttr", c.ablation.ttr);
      s.Read("only_unc", c.ablation.only_unc);
      s.Read("only_cons", c.ablation.only_cons);
    }
    if (const json* ev = root.Child("eval")) {
      Section s(*ev, "eval");
      s.Read("bidirectional", c.eval.bidirectional);
    }
  }
  c.data.gen.seed = c.seed;
  Validate(c);
  return c;
}

ExperimentConfig LoadConfig(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw ConfigError("cannot open config file " + file.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("config file " + file.string() + ": " + e.what());
  }
  return ConfigFromJson(j);
}

void SaveConfig(const ExperimentConfig& config,
                const std::filesystem::path& file) {
  std::ofstream out(file);
  if (!out) throw ConfigError("cannot write config file " + file.string());
  out << ToJson(config).dump(2) << "\n";
}

void ApplyOverride(ExperimentConfig& config, std::string_view dotted_key,
                   std::string_view value) {
  std::string key(dotted_key);
  for (char& ch : key) {
    if (ch == '-') ch = '_';
  }
  if (key.empty() || key.front() == '.' || key.back() == '.') {
    throw ConfigError("malformed config key '" + key + "'");
  }
  json parsed = json::parse(value, nullptr, /*allow_exceptions=*/false);
  if (parsed.is_discarded()) parsed = std::string(value);

  json j = ToJson(config);
  json* node = &j;
  std::stringstream parts(key);
  std::string part;
  std::vector<std::string> path;
  while (std::getline(parts, part, '.')) path.push_back(part);
  for (std::size_t i = 0; i + 1 < path.size(); ++i) {
    auto it = node->find(path[i]);
    if (it == node->end() || !it->is_object()) {
      throw ConfigError("unknown config key '" + key + "'");
    }
    node = &*it;
  }
  auto leaf = node->find(path.back());
  if (leaf == node->end()) throw ConfigError("unknown config key '" + key + "'");
  // "1" for a float field parses as an integer; keep the field's kind.
  if (leaf->is_number_float() && parsed.is_number()) {
    parsed = parsed.get<double>();
  }
  *leaf = parsed;
  config = ConfigFromJson(j);
}

void ApplyAblationPreset(ExperimentConfig& config, std::string_view preset) {
  AblationConfig a;
  if (preset == "full") {
  } else if (preset == "wo_drl") {
    a.drl = false;
  } else if (preset == "wo_drf") {
    a.drf = false;
  } else if (preset == "wo_ttr") {
    a.ttr = false;
  } else if (preset == "only_unc") {
    a.only_unc = true;
  } else if (preset == "only_cons") {
    a.only_cons = true;
  } else if (preset == "baseline") {
    a.drl = false;
    a.drf = false;
  } else {
    throw ConfigError("unknown ablation preset '" + std::string(preset) + "'");
  }
  config.ablation = a;
}

std::uint64_t NoiseSeed(const ExperimentConfig& config) { return config.seed + 1; }
std::uint64_t InitSeed(const ExperimentConfig& config) { return config.seed + 2; }
std::uint64_t ShuffleSeed(const ExperimentConfig& config) { return config.seed + 3; }

}  // namespace dnc
