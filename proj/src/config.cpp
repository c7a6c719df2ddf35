#include "npgq/config.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace npgq {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep)) out.push_back(trim(item));
  return out;
}

double parse_double(const std::string& s, const std::string& where) {
  try {
    std::size_t pos = 0;
    double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument("");
    return v;
  } catch (...) {
    throw std::invalid_argument(where + ": not a number: '" + s + "'");
  }
}

long parse_int(const std::string& s, const std::string& where) {
  try {
    std::size_t pos = 0;
    long v = std::stol(s, &pos);
    if (pos != s.size()) throw std::invalid_argument("");
    return v;
  } catch (...) {
    throw std::invalid_argument(where + ": not an integer: '" + s + "'");
  }
}

// "0:0.7, 1:0.3" -> pmf
Pmf parse_pmf(const std::string& s, const std::string& where) {
  std::vector<std::pair<int, double>> atoms;
  for (const auto& part : split(s, ',')) {
    const auto colon = part.find(':');
    if (colon == std::string::npos)
      throw std::invalid_argument(where + ": expected value:prob pairs");
    atoms.emplace_back(
        static_cast<int>(parse_int(trim(part.substr(0, colon)), where)),
        parse_double(trim(part.substr(colon + 1)), where));
  }
  try {
    return Pmf::from_atoms(std::move(atoms));
  } catch (const std::exception& e) {
    throw std::invalid_argument(where + ": " + e.what());
  }
}

RewardKind reward_kind_of(const std::string& name) {
  if (name == "mean-queue") return RewardKind::MeanQueue;
  if (name == "weighted") return RewardKind::Weighted;
  if (name == "alpha-moment") return RewardKind::AlphaMoment;
  throw std::invalid_argument("unknown reward kind: " + name);
}

}  // namespace

void ExperimentConfig::validate() const {
  if (model.empty())
    throw std::invalid_argument("config: model name is required");
  if (model == "inline") {
    if (!inline_model)
      throw std::invalid_argument("config: inline model requires a [gsse] section");
  } else {
    const auto names = preset_names();
    if (std::find(names.begin(), names.end(), model) == names.end())
      throw std::invalid_argument("config: unknown model '" + model + "'");
  }
  reward_kind_of(reward);
  if (reward == "alpha-moment" && !(alpha >= 1.0))
    throw std::invalid_argument("config: alpha must be >= 1");
  if (truncation < 0 || (truncation > 0 && truncation < 1))
    throw std::invalid_argument("config: truncation bound must be >= 1");
  if (truncation_cap < std::max(truncation, 1))
    throw std::invalid_argument("config: truncation cap below the bound");
  if (T_grid.empty()) throw std::invalid_argument("config: T grid is empty");
  for (std::size_t i = 0; i < T_grid.size(); ++i) {
    if (T_grid[i] < 1)
      throw std::invalid_argument("config: T grid entries must be >= 1");
    if (i && T_grid[i] <= T_grid[i - 1])
      throw std::invalid_argument("config: T grid must be strictly increasing");
  }
  if (init != "maxweight" && init != "weighted-maxweight" &&
      init != "alpha-maxweight" && init != "uniform" && init != "file")
    throw std::invalid_argument("config: unknown init '" + init + "'");
  if (init == "file" && init_file.empty())
    throw std::invalid_argument("config: init=file requires init_file");
  if (!(init_mix > 0.0 && init_mix < 1.0))
    throw std::invalid_argument("config: init_mix must be in (0,1)");
  if (drift_radius < 0) throw std::invalid_argument("config: negative drift radius");
}

GsseModel ExperimentConfig::build_model() const {
  GsseModel m = model == "inline" ? *inline_model : make_preset(model);
  m.reward_kind = reward_kind_of(reward);
  if (m.reward_kind == RewardKind::Weighted) {
    m.weights = weights.empty() ? std::vector<double>(m.classes, 1.0) : weights;
  }
  m.alpha = alpha;
  m.finalize();
  return m;
}

int ExperimentConfig::initial_truncation() const {
  if (truncation > 0) return truncation;
  if (model != "inline") return preset_default_truncation(model);
  return 20;
}

std::string ExperimentConfig::resolved_out_dir() const {
  if (!out_dir.empty()) return out_dir;
  if (const char* env = std::getenv("NPGQ_OUT_DIR")) return env;
  return ".";
}

void apply_config_override(ExperimentConfig* c, const std::string& key,
                           const std::string& value) {
  const std::string where = "config key '" + key + "'";
  if (key == "model") c->model = value;
  else if (key == "reward") c->reward = value;
  else if (key == "alpha") c->alpha = parse_double(value, where);
  else if (key == "weights") {
    c->weights.clear();
    for (const auto& part : split(value, ','))
      c->weights.push_back(parse_double(part, where));
  } else if (key == "truncation") c->truncation = static_cast<int>(parse_int(value, where));
  else if (key == "truncation_cap") c->truncation_cap = static_cast<int>(parse_int(value, where));
  else if (key == "T") {
    c->T_grid.clear();
    for (const auto& part : split(value, ','))
      c->T_grid.push_back(static_cast<int>(parse_int(part, where)));
  } else if (key == "init") c->init = value;
  else if (key == "init_mix") c->init_mix = parse_double(value, where);
  else if (key == "init_file") c->init_file = value;
  else if (key == "z") c->z = parse_double(value, where);
  else if (key == "seed") c->seed = static_cast<std::uint64_t>(parse_int(value, where));
  else if (key == "out") c->out_dir = value;
  else if (key == "drift_radius") c->drift_radius = static_cast<int>(parse_int(value, where));
  else if (key == "oracle_state_cap") c->oracle_state_cap = static_cast<int>(parse_int(value, where));
  else throw std::invalid_argument("unknown " + where);
}

namespace {

// Accumulates [gsse] section keys until the whole file is read, then builds.
struct InlineModelBuilder {
  std::map<std::string, std::string> kv;
  bool present = false;

  GsseModel build() const {
    GsseModel m;
    auto need = [&](const std::string& k) {
      auto it = kv.find(k);
      if (it == kv.end())
        throw std::invalid_argument("[gsse] section: missing key '" + k + "'");
      return it->second;
    };
    m.classes = static_cast<int>(parse_int(need("classes"), "[gsse] classes"));
    m.options = static_cast<int>(parse_int(need("options"), "[gsse] options"));
    if (m.classes < 1 || m.options < 1)
      throw std::invalid_argument("[gsse] section: classes/options must be >= 1");
    for (int i = 0; i < m.classes; ++i)
      m.arrivals.push_back(
          parse_pmf(need("arrival_" + std::to_string(i)), "[gsse] arrival"));
    m.services.resize(m.classes);
    for (int i = 0; i < m.classes; ++i)
      for (int j = 0; j < m.options; ++j)
        m.services[i].push_back(parse_pmf(
            need("service_" + std::to_string(i) + "_" + std::to_string(j)),
            "[gsse] service"));
    return m;  // finalized later with the reward kind applied
  }
};

}  // namespace

ExperimentConfig parse_config_text(const std::string& text,
                                   const std::string& origin) {
  ExperimentConfig config;
  InlineModelBuilder gsse;
  std::istringstream in(text);
  std::string line, section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const std::string where = origin + ":" + std::to_string(lineno);
    if (line.front() == '[') {
      if (line.back() != ']')
        throw std::invalid_argument(where + ": malformed section header");
      section = trim(line.substr(1, line.size() - 2));
      if (section == "gsse") gsse.present = true;
      else if (section != "ledger")
        throw std::invalid_argument(where + ": unknown section [" + section + "]");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument(where + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    try {
      if (section.empty()) {
        apply_config_override(&config, key, value);
      } else if (section == "gsse") {
        gsse.kv[key] = value;
      } else {  // [ledger]
        config.ledger_overrides[key] = parse_double(value, where);
      }
    } catch (const std::exception& e) {
      throw std::invalid_argument(where + ": " + e.what());
    }
  }
  if (gsse.present) {
    config.inline_model = gsse.build();
    if (config.model.empty()) config.model = "inline";
  }
  return config;
}

ExperimentConfig parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open config file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str(), path);
}

std::string to_config_text(const GsseModel& model) {
  std::ostringstream out;
  char num[64];
  auto pmf = [&](const Pmf& p) {
    std::string s;
    for (std::size_t i = 0; i < p.atoms.size(); ++i) {
      if (i) s += ", ";
      std::snprintf(num, sizeof num, "%d:%.17g", p.atoms[i].first,
                    p.atoms[i].second);
      s += num;
    }
    return s;
  };
  out << "model = inline\n";
  switch (model.reward_kind) {
    case RewardKind::MeanQueue:
      out << "reward = mean-queue\n";
      break;
    case RewardKind::Weighted: {
      out << "reward = weighted\nweights = ";
      for (int i = 0; i < model.classes; ++i) {
        if (i) out << ", ";
        std::snprintf(num, sizeof num, "%.17g", model.weights[i]);
        out << num;
      }
      out << "\n";
      break;
    }
    case RewardKind::AlphaMoment:
      std::snprintf(num, sizeof num, "%.17g", model.alpha);
      out << "reward = alpha-moment\nalpha = " << num << "\n";
      break;
  }
  out << "\n[gsse]\n";
  out << "classes = " << model.classes << "\n";
  out << "options = " << model.options << "\n";
  for (int i = 0; i < model.classes; ++i)
    out << "arrival_" << i << " = " << pmf(model.arrivals[i]) << "\n";
  for (int i = 0; i < model.classes; ++i)
    for (int j = 0; j < model.options; ++j)
      out << "service_" << i << "_" << j << " = " << pmf(model.services[i][j])
          << "\n";
  return out.str();
}

}  // namespace npgq
