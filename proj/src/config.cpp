#include "odeflow/config.hpp"

#include <cerrno>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <map>
#include <set>
#include <sstream>

namespace odeflow {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double to_double(const std::string& v, int line) {
  errno = 0;
  char* end = nullptr;
  const double x = std::strtod(v.c_str(), &end);
  if (v.empty() || end != v.c_str() + v.size() || errno == ERANGE || !std::isfinite(x)) {
    throw ParseError("expected a number, got '" + v + "'", line);
  }
  return x;
}

std::uint64_t to_u64(const std::string& v, int line) {
  std::uint64_t x = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
  if (v.empty() || ec != std::errc() || ptr != v.data() + v.size()) {
    throw ParseError("expected a non-negative integer, got '" + v + "'", line);
  }
  return x;
}

int to_int(const std::string& v, int line) {
  const std::uint64_t x = to_u64(v, line);
  if (x > 1000000000ULL) throw ParseError("integer out of range: '" + v + "'", line);
  return static_cast<int>(x);
}

bool to_bool(const std::string& v, int line) {
  if (v == "true") return true;
  if (v == "false") return false;
  throw ParseError("expected true or false, got '" + v + "'", line);
}

std::vector<std::size_t> to_attributes(const std::string& v, int line) {
  std::vector<std::size_t> out;
  if (v == "all") return out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(static_cast<std::size_t>(to_u64(trim(item), line)));
  if (out.empty()) throw ParseError("empty attribute list", line);
  return out;
}

using Setter = std::function<void(ExperimentConfig&, const std::string&, int)>;

const std::map<std::string, std::map<std::string, Setter>>& schema() {
  static const std::map<std::string, std::map<std::string, Setter>> table = {
      {"world",
       {
           {"variant",
            [](ExperimentConfig& c, const std::string& v, int line) {
              try {
                c.world.variant = world_variant_from_string(v);
              } catch (const InvalidInput& e) {
                throw ParseError(e.what(), line);
              }
            }},
           {"dim", [](ExperimentConfig& c, const std::string& v, int l) { c.world.dim = to_int(v, l); }},
           {"beta", [](ExperimentConfig& c, const std::string& v, int l) { c.world.beta = to_double(v, l); }},
           {"center", [](ExperimentConfig& c, const std::string& v, int l) { c.world.center = to_double(v, l); }},
           {"blob_spread",
            [](ExperimentConfig& c, const std::string& v, int l) { c.world.blob_spread = to_double(v, l); }},
           {"radius", [](ExperimentConfig& c, const std::string& v, int l) { c.world.radius = to_double(v, l); }},
           {"sectors", [](ExperimentConfig& c, const std::string& v, int l) { c.world.sectors = to_int(v, l); }},
           {"band", [](ExperimentConfig& c, const std::string& v, int l) { c.world.band = to_double(v, l); }},
       }},
      {"train",
       {
           {"field",
            [](ExperimentConfig& c, const std::string& v, int line) {
              try {
                c.field.kind = field_kind_from_string(v);
              } catch (const InvalidInput& e) {
                throw ParseError(e.what(), line);
              }
            }},
           {"depth", [](ExperimentConfig& c, const std::string& v, int l) { c.field.depth = to_int(v, l); }},
           {"width", [](ExperimentConfig& c, const std::string& v, int l) { c.field.width = to_int(v, l); }},
           {"iterations", [](ExperimentConfig& c, const std::string& v, int l) { c.train.iterations = to_u64(v, l); }},
           {"batch_size", [](ExperimentConfig& c, const std::string& v, int l) { c.train.batch_size = to_u64(v, l); }},
           {"t_max", [](ExperimentConfig& c, const std::string& v, int l) { c.train.t_max = to_double(v, l); }},
           {"n_steps", [](ExperimentConfig& c, const std::string& v, int l) { c.train.n_steps = to_int(v, l); }},
           {"learning_rate",
            [](ExperimentConfig& c, const std::string& v, int l) { c.train.adam.learning_rate = to_double(v, l); }},
           {"beta1", [](ExperimentConfig& c, const std::string& v, int l) { c.train.adam.beta1 = to_double(v, l); }},
           {"beta2", [](ExperimentConfig& c, const std::string& v, int l) { c.train.adam.beta2 = to_double(v, l); }},
           {"epsilon", [](ExperimentConfig& c, const std::string& v, int l) { c.train.adam.epsilon = to_double(v, l); }},
           {"clip_norm", [](ExperimentConfig& c, const std::string& v, int l) { c.train.clip_norm = to_double(v, l); }},
           {"restarts", [](ExperimentConfig& c, const std::string& v, int l) { c.train.restarts = to_u64(v, l); }},
       }},
      {"eval",
       {
           {"samples", [](ExperimentConfig& c, const std::string& v, int l) { c.eval.samples = to_u64(v, l); }},
           {"grid", [](ExperimentConfig& c, const std::string& v, int l) { c.eval.grid = to_u64(v, l); }},
           {"traj_samples",
            [](ExperimentConfig& c, const std::string& v, int l) { c.eval.traj_samples = to_u64(v, l); }},
           {"n_steps", [](ExperimentConfig& c, const std::string& v, int l) { c.eval.n_steps = to_int(v, l); }},
       }},
      {"svm",
       {
           {"codes", [](ExperimentConfig& c, const std::string& v, int l) { c.svm.codes = to_u64(v, l); }},
           {"lambda", [](ExperimentConfig& c, const std::string& v, int l) { c.svm.lambda = to_double(v, l); }},
           {"epochs", [](ExperimentConfig& c, const std::string& v, int l) { c.svm.epochs = to_u64(v, l); }},
           {"conditioned", [](ExperimentConfig& c, const std::string& v, int l) { c.svm_conditioned = to_bool(v, l); }},
       }},
      {"spectral",
       {
           {"k", [](ExperimentConfig& c, const std::string& v, int l) { c.spectral.k = to_int(v, l); }},
           {"fast_threshold",
            [](ExperimentConfig& c, const std::string& v, int l) { c.spectral.fast_threshold = to_double(v, l); }},
       }},
      {"run",
       {
           {"seed", [](ExperimentConfig& c, const std::string& v, int l) { c.seed = to_u64(v, l); }},
           {"out",
            [](ExperimentConfig& c, const std::string& v, int l) {
              if (v.empty()) throw ParseError("empty output directory", l);
              c.out = v;
            }},
           {"attributes", [](ExperimentConfig& c, const std::string& v, int l) { c.attributes = to_attributes(v, l); }},
       }},
  };
  return table;
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

std::vector<std::size_t> ExperimentConfig::attribute_list() const {
  const World w(world);
  if (attributes.empty()) {
    std::vector<std::size_t> all(w.num_attributes());
    for (std::size_t j = 0; j < all.size(); ++j) all[j] = j;
    return all;
  }
  std::set<std::size_t> seen;
  for (std::size_t a : attributes) {
    if (a >= w.num_attributes()) throw InvalidInput("config: attribute " + std::to_string(a) + " out of range");
    if (!seen.insert(a).second) throw InvalidInput("config: attribute " + std::to_string(a) + " listed twice");
  }
  return attributes;
}

void ExperimentConfig::validate() const {
  try {
    (void)World(world);
  } catch (const ConstructionError& e) {
    throw InvalidInput(std::string("config: ") + e.what());
  }
  (void)attribute_list();
  if (field.kind == FieldKind::Net) NetSpec{world.dim, field.depth, field.width > 0 ? field.width : world.dim}.validate();
  if (train.iterations == 0 || train.batch_size == 0 || train.n_steps < 1 || !(train.t_max > 0.0) ||
      train.restarts == 0) {
    throw InvalidInput("config: [train] counts and t_max must be positive");
  }
  if (!(train.adam.learning_rate > 0.0) || !(train.clip_norm >= 0.0)) {
    throw InvalidInput("config: [train] learning_rate must be positive and clip_norm non-negative");
  }
  EvalConfig e = eval;
  e.t_max = train.t_max;
  e.validate();
  svm.validate();
  if (spectral.k < 0 || spectral.k > world.dim) throw InvalidInput("config: [spectral] k must be in [0, dim]");
  if (!(spectral.fast_threshold > 1.0)) throw InvalidInput("config: [spectral] fast_threshold must exceed 1");
}

ExperimentConfig parse_config(const std::string& text) {
  ExperimentConfig config;
  std::stringstream ss(text);
  std::string raw;
  std::string section;
  std::set<std::string> seen;
  int line = 0;
  const auto& table = schema();
  while (std::getline(ss, raw)) {
    ++line;
    const auto hash = raw.find('#');
    const std::string s = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (s.empty()) continue;
    if (s.front() == '[') {
      if (s.back() != ']') throw ParseError("malformed section header", line);
      section = trim(s.substr(1, s.size() - 2));
      if (!table.contains(section)) throw ParseError("unknown section [" + section + "]", line);
      continue;
    }
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw ParseError("expected 'key = value'", line);
    const std::string key = trim(s.substr(0, eq));
    const std::string value = trim(s.substr(eq + 1));
    if (key.empty()) throw ParseError("missing key", line);
    if (section.empty()) throw ParseError("key '" + key + "' outside a section", line);
    const auto& keys = table.at(section);
    const auto it = keys.find(key);
    if (it == keys.end()) throw ParseError("unknown key '" + key + "' in [" + section + "]", line);
    if (!seen.insert(section + "." + key).second) throw ParseError("duplicate key '" + key + "'", line);
    it->second(config, value, line);
  }
  config.eval.t_max = config.train.t_max;
  config.train.seed = config.seed;
  config.eval.seed = config.seed;
  config.svm.seed = config.seed;
  return config;
}

std::string world_config_text(const WorldParams& w) {
  std::ostringstream os;
  os << "[world]\n"
     << "variant = " << to_string(w.variant) << "\n"
     << "dim = " << w.dim << "\n"
     << "beta = " << fmt(w.beta) << "\n"
     << "center = " << fmt(w.center) << "\n"
     << "blob_spread = " << fmt(w.blob_spread) << "\n"
     << "radius = " << fmt(w.radius) << "\n"
     << "sectors = " << w.sectors << "\n"
     << "band = " << fmt(w.band) << "\n";
  return os.str();
}

std::string to_config_text(const ExperimentConfig& c) {
  std::ostringstream os;
  os << world_config_text(c.world) << "\n"
     << "[train]\n"
     << "field = " << to_string(c.field.kind) << "\n"
     << "depth = " << c.field.depth << "\n"
     << "width = " << c.field.width << "\n"
     << "iterations = " << c.train.iterations << "\n"
     << "batch_size = " << c.train.batch_size << "\n"
     << "t_max = " << fmt(c.train.t_max) << "\n"
     << "n_steps = " << c.train.n_steps << "\n"
     << "learning_rate = " << fmt(c.train.adam.learning_rate) << "\n"
     << "beta1 = " << fmt(c.train.adam.beta1) << "\n"
     << "beta2 = " << fmt(c.train.adam.beta2) << "\n"
     << "epsilon = " << fmt(c.train.adam.epsilon) << "\n"
     << "clip_norm = " << fmt(c.train.clip_norm) << "\n"
     << "restarts = " << c.train.restarts << "\n\n"
     << "[eval]\n"
     << "samples = " << c.eval.samples << "\n"
     << "grid = " << c.eval.grid << "\n"
     << "traj_samples = " << c.eval.traj_samples << "\n"
     << "n_steps = " << c.eval.n_steps << "\n\n"
     << "[svm]\n"
     << "codes = " << c.svm.codes << "\n"
     << "lambda = " << fmt(c.svm.lambda) << "\n"
     << "epochs = " << c.svm.epochs << "\n"
     << "conditioned = " << (c.svm_conditioned ? "true" : "false") << "\n\n"
     << "[spectral]\n"
     << "k = " << c.spectral.k << "\n"
     << "fast_threshold = " << fmt(c.spectral.fast_threshold) << "\n\n"
     << "[run]\n"
     << "seed = " << c.seed << "\n"
     << "out = " << c.out << "\n"
     << "attributes = ";
  if (c.attributes.empty()) {
    os << "all";
  } else {
    for (std::size_t i = 0; i < c.attributes.size(); ++i) os << (i ? "," : "") << c.attributes[i];
  }
  os << "\n";
  return os.str();
}

std::uint64_t derive_seed(std::uint64_t seed, const std::string& stage, std::size_t attribute) {
  auto mix = [](std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  };
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : stage) h = (h ^ ch) * 0x100000001b3ULL;
  return mix(mix(mix(seed) ^ h) ^ static_cast<std::uint64_t>(attribute));
}

}  // namespace odeflow
