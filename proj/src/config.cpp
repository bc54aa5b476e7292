#include "lsopt/config.hpp"

#include <fstream>
#include <set>

#include <fmt/format.h>

namespace lsopt {

using nlohmann::json;

namespace {

/// Reads keys from one JSON object and rejects any it did not consume.
class Section {
 public:
  Section(const json& obj, std::string name) : obj_(obj), name_(std::move(name)) {
    if (!obj_.is_object()) throw ConfigError(fmt::format("'{}' must be an object", name_));
  }

  bool has(const char* key) const { return obj_.contains(key) && !obj_.at(key).is_null(); }

  template <typename T>
  T get(const char* key, T fallback) {
    seen_.insert(key);
    if (!has(key)) return fallback;
    return convert<T>(obj_.at(key), key);
  }

  template <typename T>
  T require(const char* key) {
    seen_.insert(key);
    if (!has(key)) throw ConfigError(fmt::format("'{}' is missing '{}'", name_, key));
    return convert<T>(obj_.at(key), key);
  }

  const json& raw(const char* key) {
    seen_.insert(key);
    if (!has(key)) throw ConfigError(fmt::format("'{}' is missing '{}'", name_, key));
    return obj_.at(key);
  }

  void finish() const {
    for (const auto& [key, value] : obj_.items()) {
      if (!seen_.contains(key)) throw ConfigError(fmt::format("unknown key '{}.{}'", name_, key));
    }
  }

 private:
  template <typename T>
  T convert(const json& v, const char* key) const {
    try {
      if constexpr (std::is_unsigned_v<T> && !std::is_same_v<T, bool>) {
        if (!v.is_number_unsigned()) throw ConfigError("");
      }
      return v.get<T>();
    } catch (const std::exception&) {
      throw ConfigError(fmt::format("'{}.{}' has the wrong type", name_, key));
    }
  }

  json obj_;
  std::string name_;
  std::set<std::string> seen_;
};

protocol::EndpointAddress parse_endpoint(const json& doc, const std::string& name) {
  Section s(doc, name);
  protocol::EndpointAddress ep;
  ep.command = s.get<std::vector<std::string>>("command", {});
  ep.address = s.get<std::string>("address", "");
  ep.timeout = std::chrono::milliseconds(s.get<std::uint64_t>("timeout_ms", 30000));
  s.finish();
  if (ep.command.empty() == ep.address.empty()) {
    throw ConfigError(fmt::format("'{}' needs exactly one of 'command' or 'address'", name));
  }
  return ep;
}

json endpoint_json(const protocol::EndpointAddress& ep) {
  json j;
  if (!ep.command.empty()) j["command"] = ep.command;
  if (!ep.address.empty()) j["address"] = ep.address;
  j["timeout_ms"] = ep.timeout.count();
  return j;
}

ObjectiveSpec parse_objective(const json& doc, std::size_t index) {
  Section s(doc, fmt::format("oracle.objectives[{}]", index));
  ObjectiveSpec o;
  o.kind = parse_objective_kind(s.require<std::string>("kind"));
  switch (o.kind) {
    case ObjectiveKind::TrapK: o.trap_k = s.get<std::size_t>("k", 4); break;
    case ObjectiveKind::MotifMatch: o.motif = s.require<std::string>("target"); break;
    case ObjectiveKind::GaussianPeak:
      o.center = s.require<std::vector<double>>("center");
      o.width = s.get<double>("width", 1.0);
      break;
    default: break;
  }
  s.finish();
  return o;
}

json objective_json(const ObjectiveSpec& o) {
  json j{{"kind", to_string(o.kind)}};
  switch (o.kind) {
    case ObjectiveKind::TrapK: j["k"] = o.trap_k; break;
    case ObjectiveKind::MotifMatch: j["target"] = o.motif; break;
    case ObjectiveKind::GaussianPeak:
      j["center"] = o.center;
      j["width"] = o.width;
      break;
    default: break;
  }
  return j;
}

}  // namespace

void ExperimentConfig::validate() const {
  evolution.validate();
  model.validate();
  oracle.validate();
  ScreeningConfig{screening.lambda, 1}.validate();
  if (screening.knn_k < 1) throw ConfigError("screening.k must be >= 1");
  if (seeds.empty()) throw ConfigError("at least one seed is required");
  if (out_dir.empty()) throw ConfigError("out_dir must not be empty");

  if (oracle.kind == OracleKind::Builtin) {
    for (const auto& o : oracle.objectives) {
      if (o.domain() != model.domain()) {
        throw ConfigError(fmt::format("objective {} scores {} candidates but the model produces {}",
                                      o.name(), to_string(o.domain()), to_string(model.domain())));
      }
      switch (o.kind) {
        case ObjectiveKind::TrapK:
          if (model.dim % o.trap_k != 0) {
            throw ConfigError(fmt::format("trap block size {} does not divide length {}", o.trap_k,
                                          model.dim));
          }
          break;
        case ObjectiveKind::MotifMatch:
          if (o.motif.size() != model.dim) {
            throw ConfigError(fmt::format("motif length {} does not match length {}",
                                          o.motif.size(), model.dim));
          }
          break;
        case ObjectiveKind::GaussianPeak:
          if (o.center.size() != model.dim) {
            throw ConfigError(fmt::format("peak center dimension {} does not match {}",
                                          o.center.size(), model.dim));
          }
          break;
        default: break;
      }
    }
  } else if (model.domain() == Domain::RealVector) {
    throw ConfigError("external oracles assess token or bitstring candidates");
  }
}

ExperimentConfig parse_config(const json& doc) {
  Section top(doc, "config");
  ExperimentConfig cfg;

  if (top.has("evolution")) {
    Section s(top.raw("evolution"), "evolution");
    auto& e = cfg.evolution;
    e.n_pop = s.get<std::size_t>("n_pop", e.n_pop);
    e.n_elite = s.get<std::size_t>("n_elite", e.n_elite);
    e.epochs = s.get<std::size_t>("epochs", e.epochs);
    e.plan.noises_per_elite = s.get<std::size_t>("noises_per_elite", e.plan.noises_per_elite);
    e.plan.sigmas = s.get<std::vector<double>>("sigmas", e.plan.sigmas);
    e.plan.dedup = s.get<bool>("dedup", e.plan.dedup);
    const bool capped = s.has("budget_cap");
    const auto cap = s.get<std::uint64_t>("budget_cap", 0);
    if (capped) e.budget_cap = cap;
    e.elitism = s.get<bool>("elitism", e.elitism);
    e.latent_cache = s.get<bool>("latent_cache", e.latent_cache);
    e.assessment_cache = s.get<bool>("assessment_cache", e.assessment_cache);
    s.finish();
  } else {
    top.get<json>("evolution", {});
  }

  {
    Section s(top.require<json>("model"), "model");
    auto& m = cfg.model;
    m.kind = parse_model_kind(s.require<std::string>("kind"));
    m.dim = s.require<std::size_t>("dim");
    m.bit_scale = s.get<double>("bit_scale", 1.0);
    if (s.has("endpoint")) m.endpoint = parse_endpoint(s.raw("endpoint"), "model.endpoint");
    s.finish();
  }

  {
    Section s(top.require<json>("oracle"), "oracle");
    auto& o = cfg.oracle;
    const auto kind = s.get<std::string>("kind", "builtin");
    if (kind == "builtin") {
      o.kind = OracleKind::Builtin;
      const auto& objs = s.raw("objectives");
      if (!objs.is_array()) throw ConfigError("oracle.objectives must be an array");
      for (std::size_t i = 0; i < objs.size(); ++i) o.objectives.push_back(parse_objective(objs[i], i));
    } else if (kind == "external") {
      o.kind = OracleKind::External;
      o.objective_names = s.require<std::vector<std::string>>("objectives");
      o.endpoint = parse_endpoint(s.raw("endpoint"), "oracle.endpoint");
    } else {
      throw ConfigError(fmt::format("unknown oracle kind '{}'", kind));
    }
    o.combiner = parse_combiner(s.get<std::string>("combiner", "mean"));
    s.finish();
  }

  if (top.has("screening")) {
    Section s(top.raw("screening"), "screening");
    cfg.screening.lambda = s.get<double>("lambda", cfg.screening.lambda);
    cfg.screening.knn_k = s.get<std::size_t>("k", cfg.screening.knn_k);
    cfg.screening.weighting = parse_weighting(s.get<std::string>("weighting", "inverse_distance"));
    s.finish();
  } else {
    top.get<json>("screening", {});
  }

  cfg.ablation = parse_ablation(top.get<std::string>("ablation", "full"));
  cfg.seeds = top.get<std::vector<std::uint64_t>>("seeds", cfg.seeds);
  cfg.out_dir = top.get<std::string>("out_dir", cfg.out_dir);
  top.finish();
  cfg.validate();
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(fmt::format("cannot open config '{}'", path.string()));
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(fmt::format("config '{}' is not valid JSON: {}", path.string(), e.what()));
  }
  return parse_config(doc);
}

json to_json(const ExperimentConfig& cfg) {
  const auto& e = cfg.evolution;
  json evo{{"n_pop", e.n_pop},
           {"n_elite", e.n_elite},
           {"epochs", e.epochs},
           {"noises_per_elite", e.plan.noises_per_elite},
           {"sigmas", e.plan.sigmas},
           {"dedup", e.plan.dedup},
           {"budget_cap", e.budget_cap ? json(*e.budget_cap) : json(nullptr)},
           {"elitism", e.elitism},
           {"latent_cache", e.latent_cache},
           {"assessment_cache", e.assessment_cache}};
  json model{{"kind", to_string(cfg.model.kind)},
             {"dim", cfg.model.dim},
             {"bit_scale", cfg.model.bit_scale}};
  if (cfg.model.endpoint) model["endpoint"] = endpoint_json(*cfg.model.endpoint);
  json oracle{{"combiner", to_string(cfg.oracle.combiner)}};
  if (cfg.oracle.kind == OracleKind::Builtin) {
    oracle["kind"] = "builtin";
    oracle["objectives"] = json::array();
    for (const auto& o : cfg.oracle.objectives) oracle["objectives"].push_back(objective_json(o));
  } else {
    oracle["kind"] = "external";
    oracle["objectives"] = cfg.oracle.objective_names;
    oracle["endpoint"] = endpoint_json(*cfg.oracle.endpoint);
  }
  return json{{"evolution", evo},
              {"model", model},
              {"oracle", oracle},
              {"screening",
               {{"lambda", cfg.screening.lambda},
                {"k", cfg.screening.knn_k},
                {"weighting", to_string(cfg.screening.weighting)}}},
              {"ablation", to_string(cfg.ablation)},
              {"seeds", cfg.seeds},
              {"out_dir", cfg.out_dir}};
}

std::string default_motif(std::size_t length) {
  static constexpr char kBlock[] = "1100";
  std::string motif(length, '0');
  for (std::size_t i = 0; i < length; ++i) motif[i] = kBlock[i % 4];
  return motif;
}

ExperimentConfig desk_two_objective_config() {
  ExperimentConfig cfg;
  cfg.model.kind = ModelKind::BitstringThreshold;
  cfg.model.dim = 60;
  cfg.model.bit_scale = 1.0;
  cfg.oracle.kind = OracleKind::Builtin;
  cfg.oracle.combiner = Combiner::Mean;
  ObjectiveSpec onemax;
  onemax.kind = ObjectiveKind::OneMax;
  ObjectiveSpec motif;
  motif.kind = ObjectiveKind::MotifMatch;
  motif.motif = default_motif(cfg.model.dim);
  cfg.oracle.objectives = {onemax, motif};
  return cfg;
}

ExperimentConfig desk_four_objective_config() {
  ExperimentConfig cfg = desk_two_objective_config();
  ObjectiveSpec leading;
  leading.kind = ObjectiveKind::LeadingOnes;
  ObjectiveSpec trap;
  trap.kind = ObjectiveKind::TrapK;
  trap.trap_k = 4;
  cfg.oracle.objectives.push_back(leading);
  cfg.oracle.objectives.push_back(trap);
  return cfg;
}

}  // namespace lsopt
