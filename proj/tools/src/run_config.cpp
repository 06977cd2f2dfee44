#include "studentsim/cli/run_config.hpp"

#include <fstream>

namespace studentsim::cli {

using nlohmann::json;

ConfigError::ConfigError(std::string key, const std::string& what)
    : std::runtime_error("config key '" + key + "': " + what), key_(std::move(key)) {}

std::string to_string(Mode m) { return m == Mode::kExperiment1 ? "experiment1" : "experiment2"; }

std::string to_string(PriorMode m) { return m == PriorMode::kCognitivePriors ? "cognitive" : "standard"; }

std::string ablation_code(const Ablation& a) {
  std::string code;
  if (a.drop_motor) code += 'M';
  if (a.drop_gaze) code += 'P';
  if (a.drop_cognitive) code += 'C';
  if (a.drop_demonstration) code += 'D';
  return code.empty() ? "none" : code;
}

Ablation parse_ablation(const std::string& code) {
  Ablation a;
  if (code == "none" || code.empty()) return a;
  for (char c : code) {
    switch (c) {
      case 'M': a.drop_motor = true; break;
      case 'P': a.drop_gaze = true; break;
      case 'C': a.drop_cognitive = true; break;
      case 'D': a.drop_demonstration = true; break;
      default: throw ConfigError("ablate", "expected none or letters from M, P, C, D, got '" + code + "'");
    }
  }
  return a;
}

namespace {

template <typename T>
T get_as(const json& j, const std::string& key, const char* expected) {
  try {
    return j.get<T>();
  } catch (const json::exception&) {
    throw ConfigError(key, std::string("expected ") + expected + ", got " + j.dump());
  }
}

void require_object(const json& j, const std::string& key) {
  if (!j.is_object()) throw ConfigError(key, "expected an object");
}

std::optional<CognitiveDim> dim_from_name(const std::string& name) {
  for (std::size_t d = 0; d < kCognitiveDims; ++d) {
    if (kCognitiveNames[d] == name) return static_cast<CognitiveDim>(d);
  }
  return std::nullopt;
}

std::optional<Trait> trait_from_name(const std::string& name) {
  for (std::size_t t = 0; t < kTraitCount; ++t) {
    if (kTraitNames[t] == name) return static_cast<Trait>(t);
  }
  return std::nullopt;
}

json rule_to_json(const llm::CognitiveRule& r) {
  json weights = json::object();
  for (const auto& [trait, w] : r.weights) weights[std::string(kTraitNames[static_cast<std::size_t>(trait)])] = w;
  return json{{"target", std::string(kCognitiveNames[static_cast<std::size_t>(r.target)])},
              {"intercept", r.intercept},
              {"weights", weights},
              {"noise", r.noise}};
}

llm::CognitiveRule rule_from_json(const json& j, const std::string& key) {
  require_object(j, key);
  llm::CognitiveRule r;
  for (const auto& [k, v] : j.items()) {
    const std::string path = key + "." + k;
    if (k == "target") {
      const auto name = get_as<std::string>(v, path, "a cognitive state name");
      auto d = dim_from_name(name);
      if (!d) throw ConfigError(path, "unknown cognitive state '" + name + "'");
      r.target = *d;
    } else if (k == "intercept") {
      r.intercept = get_as<double>(v, path, "a number");
    } else if (k == "noise") {
      r.noise = get_as<double>(v, path, "a number");
    } else if (k == "weights") {
      require_object(v, path);
      for (const auto& [trait_name, w] : v.items()) {
        auto t = trait_from_name(trait_name);
        if (!t) throw ConfigError(path + "." + trait_name, "unknown persona trait");
        r.weights.emplace_back(*t, get_as<double>(w, path + "." + trait_name, "a number"));
      }
    } else {
      throw ConfigError(path, "unknown key");
    }
  }
  return r;
}

void mock_from_json(const json& j, llm::MockPolicy& mock) {
  require_object(j, "mock");
  for (const auto& [k, v] : j.items()) {
    const std::string path = "mock." + k;
    if (k == "rules") {
      if (!v.is_array()) throw ConfigError(path, "expected an array");
      mock.rules.clear();
      for (std::size_t i = 0; i < v.size(); ++i) mock.rules.push_back(rule_from_json(v[i], path + "[" + std::to_string(i) + "]"));
    } else if (k == "faults") {
      require_object(v, path);
      for (const auto& [fk, fv] : v.items()) {
        const std::string fpath = path + "." + fk;
        if (fk == "failing_agents") {
          mock.faults.failing_agents = get_as<std::set<std::size_t>>(fv, fpath, "an array of agent indices");
        } else if (fk == "transient_failures") {
          mock.faults.transient_failures = get_as<int>(fv, fpath, "an integer");
        } else if (fk == "invalid_replies") {
          mock.faults.invalid_replies = get_as<int>(fv, fpath, "an integer");
        } else {
          throw ConfigError(fpath, "unknown key");
        }
      }
    } else {
      throw ConfigError(path, "unknown key");
    }
  }
}

void provider_from_json(const json& j, llm::ProviderConfig& p) {
  require_object(j, "provider");
  for (const auto& [k, v] : j.items()) {
    const std::string path = "provider." + k;
    if (k == "kind") {
      p.kind = get_as<std::string>(v, path, "a string");
    } else if (k == "endpoint") {
      p.endpoint = get_as<std::string>(v, path, "a string");
    } else if (k == "credential_env") {
      p.credential_env = get_as<std::string>(v, path, "a string");
    } else if (k == "requests_per_minute") {
      p.requests_per_minute = get_as<int>(v, path, "an integer");
    } else if (k == "timeout_s") {
      p.timeout = std::chrono::seconds(get_as<long>(v, path, "an integer"));
    } else if (k == "retry") {
      require_object(v, path);
      for (const auto& [rk, rv] : v.items()) {
        const std::string rpath = path + "." + rk;
        if (rk == "max_attempts") {
          p.retry.max_attempts = get_as<int>(rv, rpath, "an integer");
        } else if (rk == "base_backoff_ms") {
          p.retry.base_backoff = std::chrono::milliseconds(get_as<long>(rv, rpath, "an integer"));
        } else if (rk == "multiplier") {
          p.retry.multiplier = get_as<double>(rv, rpath, "a number");
        } else if (rk == "max_backoff_ms") {
          p.retry.max_backoff = std::chrono::milliseconds(get_as<long>(rv, rpath, "an integer"));
        } else {
          throw ConfigError(rpath, "unknown key");
        }
      }
    } else {
      throw ConfigError(path, "unknown key");
    }
  }
}

void simulation_from_json(const json& j, SimulationConfig& s) {
  require_object(j, "simulation");
  for (const auto& [k, v] : j.items()) {
    const std::string path = "simulation." + k;
    if (k == "prior") {
      const auto prior = get_as<std::string>(v, path, "a string");
      if (prior == "cognitive") {
        s.prior_mode = PriorMode::kCognitivePriors;
      } else if (prior == "standard") {
        s.prior_mode = PriorMode::kStandard;
      } else {
        throw ConfigError(path, "expected cognitive or standard, got '" + prior + "'");
      }
    } else if (k == "ablate") {
      try {
        s.ablation = parse_ablation(get_as<std::string>(v, path, "a string"));
      } catch (const ConfigError& e) {
        throw ConfigError(path, e.what());
      }
    } else if (k == "model") {
      s.model_name = get_as<std::string>(v, path, "a string");
    } else if (k == "temperature") {
      s.temperature = get_as<double>(v, path, "a number");
    } else if (k == "max_tokens") {
      s.max_tokens = get_as<int>(v, path, "an integer");
    } else if (k == "max_parse_retries") {
      s.max_parse_retries = get_as<int>(v, path, "an integer");
    } else {
      throw ConfigError(path, "unknown key");
    }
  }
}

}  // namespace

json run_config_to_json(const RunConfig& c) {
  json mock_rules = json::array();
  for (const auto& r : c.mock.rules) mock_rules.push_back(rule_to_json(r));
  json j{
      {"lecture", c.lecture.string()},
      {"mode", to_string(c.mode)},
      {"cohort_size", c.cohort_size ? json(*c.cohort_size) : json(nullptr)},
      {"records", c.records ? json(c.records->string()) : json(nullptr)},
      {"seed", c.simulation.seed},
      {"workers", c.workers},
      {"logs", c.logs},
      {"templates", c.templates ? json(c.templates->string()) : json(nullptr)},
      {"simulation",
       {{"prior", to_string(c.simulation.prior_mode)},
        {"ablate", ablation_code(c.simulation.ablation)},
        {"model", c.simulation.model_name},
        {"temperature", c.simulation.temperature},
        {"max_tokens", c.simulation.max_tokens},
        {"max_parse_retries", c.simulation.max_parse_retries}}},
      {"provider",
       {{"kind", c.provider.kind},
        {"endpoint", c.provider.endpoint},
        {"credential_env", c.provider.credential_env},
        {"requests_per_minute", c.provider.requests_per_minute},
        {"timeout_s", c.provider.timeout.count()},
        {"retry",
         {{"max_attempts", c.provider.retry.max_attempts},
          {"base_backoff_ms", c.provider.retry.base_backoff.count()},
          {"multiplier", c.provider.retry.multiplier},
          {"max_backoff_ms", c.provider.retry.max_backoff.count()}}}}},
      {"mock",
       {{"rules", mock_rules},
        {"faults",
         {{"failing_agents", c.mock.faults.failing_agents},
          {"transient_failures", c.mock.faults.transient_failures},
          {"invalid_replies", c.mock.faults.invalid_replies}}}}},
  };
  return j;
}

RunConfig run_config_from_json(const json& input, RunConfig c) {
  const json& j = input.contains("config") && input.at("config").is_object() ? input.at("config") : input;
  require_object(j, "<root>");
  for (const auto& [k, v] : j.items()) {
    if (k == "lecture") {
      c.lecture = get_as<std::string>(v, k, "a path");
    } else if (k == "mode") {
      const auto mode = get_as<std::string>(v, k, "a string");
      if (mode == "experiment1") {
        c.mode = Mode::kExperiment1;
      } else if (mode == "experiment2") {
        c.mode = Mode::kExperiment2;
      } else {
        throw ConfigError(k, "expected experiment1 or experiment2, got '" + mode + "'");
      }
    } else if (k == "cohort_size") {
      if (v.is_null()) {
        c.cohort_size.reset();
      } else {
        c.cohort_size = get_as<std::size_t>(v, k, "a non-negative integer");
      }
    } else if (k == "records") {
      if (v.is_null()) {
        c.records.reset();
      } else {
        c.records = get_as<std::string>(v, k, "a path");
      }
    } else if (k == "templates") {
      if (v.is_null()) {
        c.templates.reset();
      } else {
        c.templates = get_as<std::string>(v, k, "a path");
      }
    } else if (k == "seed") {
      c.simulation.seed = get_as<std::uint64_t>(v, k, "a non-negative integer");
    } else if (k == "workers") {
      c.workers = get_as<std::size_t>(v, k, "a positive integer");
    } else if (k == "logs") {
      c.logs = get_as<bool>(v, k, "true or false");
    } else if (k == "out") {
      c.out = get_as<std::string>(v, k, "a path");
    } else if (k == "simulation") {
      simulation_from_json(v, c.simulation);
    } else if (k == "provider") {
      provider_from_json(v, c.provider);
    } else if (k == "mock") {
      mock_from_json(v, c.mock);
    } else {
      throw ConfigError(k, "unknown key");
    }
  }
  return c;
}

RunConfig load_run_config(const std::filesystem::path& path, RunConfig base) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config", "cannot open " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("config", path.string() + " is not valid JSON: " + e.what());
  }
  return run_config_from_json(j, std::move(base));
}

void validate_run_config(const RunConfig& c) {
  if (c.lecture.empty()) throw ConfigError("lecture", "a lecture file is required");
  if (c.mode == Mode::kExperiment1 && !c.records) {
    throw ConfigError("records", "experiment1 needs the real student records file");
  }
  if (c.mode == Mode::kExperiment2 && (!c.cohort_size || *c.cohort_size < 1)) {
    throw ConfigError("cohort_size", "experiment2 needs a cohort size of at least 1");
  }
  if (c.workers < 1) throw ConfigError("workers", "must be at least 1");
  if (c.provider.kind != "mock" && c.provider.kind != "remote") {
    throw ConfigError("provider.kind", "expected remote or mock, got '" + c.provider.kind + "'");
  }
  if (c.provider.retry.max_attempts < 1) throw ConfigError("provider.retry.max_attempts", "must be at least 1");
  if (c.provider.requests_per_minute < 0) throw ConfigError("provider.requests_per_minute", "must not be negative");
  if (c.simulation.max_tokens < 1) throw ConfigError("simulation.max_tokens", "must be at least 1");
  if (c.simulation.max_parse_retries < 0) throw ConfigError("simulation.max_parse_retries", "must not be negative");
  if (!(c.simulation.temperature >= 0.0 && c.simulation.temperature <= 2.0)) {
    throw ConfigError("simulation.temperature", "must lie in [0, 2]");
  }
}

}  // namespace studentsim::cli
