#include "odeflow/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <iostream>
#include <map>
#include <regex>
#include <sstream>

#include "json.hpp"

#include "odeflow/baselines.hpp"
#include "odeflow/editing.hpp"
#include "odeflow/evaluation.hpp"
#include "odeflow/spectral.hpp"

namespace odeflow {

namespace fs = std::filesystem;

namespace {

constexpr const char* kWorldFile = "world.cfg";
constexpr const char* kSamplesFile = "world_samples.csv";
constexpr const char* kManifestFile = "manifest.json";
constexpr const char* kSpectralFile = "spectral.csv";
constexpr const char* kBaselineDiagnostics = "baseline_diagnostics.csv";
constexpr const char* kSvgFile = "cd_curves.svg";
constexpr const char* kSummaryFile = "summary.txt";
constexpr const char* kSvmMethod = "svm";

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string fmt9(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string utc_now() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void say(std::ostream* log, const std::string& line) {
  if (log) *log << line << '\n';
}

std::string checkpoint_name(const std::string& method, std::size_t attribute) {
  return method + "_attr" + std::to_string(attribute) + ".ckpt";
}

std::string meta_name(const std::string& method, std::size_t attribute) {
  return method + "_attr" + std::to_string(attribute) + ".meta";
}

std::string curve_name(const std::string& method, std::size_t attribute) {
  return "cd_" + method + "_attr" + std::to_string(attribute) + ".csv";
}

fs::path require(const fs::path& path, const std::string& hint) {
  if (!fs::exists(path)) throw FileNotFound("missing input " + path.string() + " (" + hint + ")");
  return path;
}

World load_world(const ExperimentConfig& config) {
  const fs::path path = require(fs::path(config.out) / kWorldFile, "run worldgen first");
  const ExperimentConfig stored = parse_config(read_file(path));
  if (!(stored.world == config.world)) {
    throw InvalidInput(path.string() + " does not match the [world] section of the config; rerun worldgen");
  }
  return World(stored.world);
}

struct LoadedEdit {
  VectorField field;
  EditMeta meta;
};

LoadedEdit load_edit(const fs::path& dir, const std::string& method, std::size_t attribute, const World& world) {
  const fs::path ckpt = require(dir / checkpoint_name(method, attribute), "run train or baseline first");
  const fs::path meta_path = require(dir / meta_name(method, attribute), "checkpoint sidecar");
  std::ifstream in(ckpt);
  VectorField field = read_checkpoint(in);
  EditMeta meta = parse_meta(read_file(meta_path));
  if (meta.attribute != attribute) throw InvalidInput(meta_path.string() + ": attribute does not match the file name");
  if (!(meta.world == world.params())) throw InvalidInput(meta_path.string() + ": trained on a different world");
  if (field.dim() != world.dim()) throw InvalidInput(ckpt.string() + ": dimension does not match the world");
  return {std::move(field), std::move(meta)};
}

std::string checkpoint_text(const VectorField& field) {
  std::ostringstream os;
  write_checkpoint(os, field);
  return os.str();
}

// Files written by one stage, recorded in the manifest.
class Outputs {
 public:
  explicit Outputs(fs::path dir) : dir_(std::move(dir)) {}

  void write(const std::string& name, const std::string& content) {
    write_atomic(dir_ / name, content);
    names_.push_back(name);
  }

  const std::vector<std::string>& names() const noexcept { return names_; }
  const fs::path& dir() const noexcept { return dir_; }

 private:
  fs::path dir_;
  std::vector<std::string> names_;
};

void update_manifest(const ExperimentConfig& config, const std::string& command, const Outputs& outputs) {
  using nlohmann::json;
  const fs::path path = outputs.dir() / kManifestFile;
  const std::string now = utc_now();
  json manifest = json::object();
  if (fs::exists(path)) {
    try {
      manifest = json::parse(read_file(path));
    } catch (const json::exception& e) {
      throw InvalidInput(path.string() + ": unreadable manifest: " + e.what());
    }
  }
  std::map<std::string, std::string> producer;
  if (manifest.contains("files")) {
    for (const auto& f : manifest["files"]) producer[f.at("path").get<std::string>()] = f.at("command").get<std::string>();
  }
  for (const auto& name : outputs.names()) producer[name] = command;

  json files = json::array();
  for (const auto& [name, by] : producer) {
    const fs::path file = outputs.dir() / name;
    if (!fs::exists(file)) continue;
    const std::string bytes = read_file(file);
    files.push_back({{"path", name}, {"fnv1a64", fnv1a_hex(bytes)}, {"bytes", bytes.size()}, {"command", by}});
  }
  json out = {
      {"tool", "odeflow"},
      {"version", kToolVersion},
      {"created", manifest.value("created", now)},
      {"updated", now},
      {"last_command", command},
      {"config", to_config_text(config)},
      {"files", files},
  };
  write_atomic(path, out.dump(2) + "\n");
}

// Checkpoints named <method>_attr<i>.ckpt for attribute i, sorted by method.
std::vector<std::string> methods_for(const fs::path& dir, std::size_t attribute) {
  std::vector<std::string> methods;
  if (!fs::is_directory(dir)) return methods;
  const std::regex pattern("([a-z_]+)_attr" + std::to_string(attribute) + "\\.ckpt");
  for (const auto& entry : fs::directory_iterator(dir)) {
    std::smatch m;
    const std::string name = entry.path().filename().string();
    if (std::regex_match(name, m, pattern)) methods.push_back(m[1]);
  }
  std::sort(methods.begin(), methods.end());
  return methods;
}

double tail_mean(const std::vector<LossTerms>& history, std::size_t n) {
  n = std::min(n, history.size());
  double sum = 0.0;
  for (std::size_t i = history.size() - n; i < history.size(); ++i) sum += history[i].total;
  return n ? sum / static_cast<double>(n) : 0.0;
}

std::string svg_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string summary_text(const std::vector<std::pair<CurveFile, CDCurve>>& curves) {
  std::ostringstream os;
  os << "method attribute max_control tau_at_max d_at_max min_d_at_c0.9\n";
  for (const auto& [file, curve] : curves) {
    const CDPoint* best = &curve.points.front();
    double min_d = -1.0;
    for (const auto& p : curve.points) {
      if (p.control > best->control) best = &p;
      if (p.control >= 0.9 && (min_d < 0.0 || p.disentanglement < min_d)) min_d = p.disentanglement;
    }
    os << file.method << ' ' << file.attribute << ' ' << fmt9(best->control) << ' ' << fmt9(best->tau) << ' '
       << fmt9(best->disentanglement) << ' ' << (min_d < 0.0 ? std::string("n/a") : fmt9(min_d)) << '\n';
  }
  return os.str();
}

}  // namespace

std::string fnv1a_hex(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) h = (h ^ c) * 0x100000001b3ULL;
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

void write_atomic(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw InvalidInput("cannot write " + tmp.string());
    out << content;
    out.flush();
    if (!out) throw InvalidInput("write failed: " + tmp.string());
  }
  fs::rename(tmp, path);
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FileNotFound("cannot open " + path.string());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

std::string meta_text(const EditMeta& meta) {
  std::ostringstream os;
  os << world_config_text(meta.world) << "\n[edit]\n"
     << "method = " << meta.method << "\n"
     << "attribute = " << meta.attribute << "\n"
     << "source = " << meta.source << "\n"
     << "target = " << meta.target << "\n"
     << "t_max = " << fmt17(meta.t_max) << "\n";
  return os.str();
}

EditMeta parse_meta(const std::string& text) {
  // The [world] block goes through the config parser; blank lines keep its
  // line numbers aligned.
  std::istringstream in(text);
  std::string line;
  std::string world_part;
  std::map<std::string, std::pair<std::string, int>> edit;
  bool in_edit = false;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string s = trim(line.substr(0, line.find('#')));
    if (s == "[edit]") {
      in_edit = true;
      world_part += "\n";
      continue;
    }
    if (!in_edit) {
      world_part += line + "\n";
      continue;
    }
    if (s.empty()) continue;
    const auto eq = s.find('=');
    if (eq == std::string::npos || s.front() == '[') throw ParseError("expected 'key = value' in [edit]", line_no);
    const std::string key = trim(s.substr(0, eq));
    if (!edit.emplace(key, std::make_pair(trim(s.substr(eq + 1)), line_no)).second) {
      throw ParseError("duplicate key '" + key + "'", line_no);
    }
  }
  if (!in_edit) throw ParseError("missing [edit] section", line_no);

  EditMeta meta;
  meta.world = parse_config(world_part).world;
  auto take = [&](const std::string& key) {
    const auto it = edit.find(key);
    if (it == edit.end()) throw ParseError("missing key '" + key + "' in [edit]", line_no);
    auto v = it->second;
    edit.erase(it);
    return v;
  };
  auto number = [](const std::pair<std::string, int>& v) {
    char* end = nullptr;
    const double x = std::strtod(v.first.c_str(), &end);
    if (v.first.empty() || *end != '\0' || !std::isfinite(x)) throw ParseError("bad number '" + v.first + "'", v.second);
    return x;
  };
  auto integer = [&](const std::pair<std::string, int>& v) {
    const double x = number(v);
    if (x < 0.0 || x != std::floor(x)) throw ParseError("expected a non-negative integer", v.second);
    return static_cast<long long>(x);
  };
  meta.method = take("method").first;
  meta.attribute = static_cast<std::size_t>(integer(take("attribute")));
  meta.source = static_cast<int>(integer(take("source")));
  meta.target = static_cast<int>(integer(take("target")));
  meta.t_max = number(take("t_max"));
  if (!edit.empty()) {
    throw ParseError("unknown key '" + edit.begin()->first + "' in [edit]", edit.begin()->second.second);
  }
  return meta;
}

ExperimentConfig load_config(const RunOptions& options) {
  ExperimentConfig config;
  try {
    if (!options.config_path.empty()) {
      if (!fs::exists(options.config_path)) throw UsageError("config file not found: " + options.config_path);
      config = parse_config(read_file(options.config_path));
    }
    if (options.seed) config.seed = *options.seed;
    if (options.out) config.out = *options.out;
    if (config.out.empty()) throw UsageError("output directory must not be empty");
    config.train.seed = config.seed;
    config.eval.seed = config.seed;
    config.svm.seed = config.seed;
    config.eval.t_max = config.train.t_max;
    config.validate();
  } catch (const ParseError& e) {
    throw UsageError(options.config_path + ": " + e.what());
  } catch (const InvalidInput& e) {
    throw UsageError(e.what());
  }
  return config;
}

void run_worldgen(const ExperimentConfig& config, std::ostream* log) {
  const World world(config.world);
  Outputs out(config.out);
  out.write(kWorldFile, world_config_text(world.params()));

  Rng rng(derive_seed(config.seed, "worldgen", 0));
  std::ostringstream csv;
  for (Eigen::Index i = 0; i < world.dim(); ++i) csv << "w" << i << ',';
  for (std::size_t j = 0; j < world.num_attributes(); ++j) csv << "attr" << j << (j + 1 < world.num_attributes() ? "," : "\n");
  for (std::size_t s = 0; s < config.eval.samples; ++s) {
    const Vector w = world.sample_latent(rng);
    for (Eigen::Index i = 0; i < w.size(); ++i) csv << fmt9(w(i)) << ',';
    const AttributeLabels labels = world.hard_regress(w);
    for (std::size_t j = 0; j < labels.size(); ++j) csv << labels[j] << (j + 1 < labels.size() ? "," : "\n");
  }
  out.write(kSamplesFile, csv.str());
  update_manifest(config, "worldgen", out);
  say(log, "worldgen: " + to_string(world.variant()) + " d=" + std::to_string(world.dim()) + ", " +
               std::to_string(config.eval.samples) + " samples");
}

void run_train(const ExperimentConfig& config, std::ostream* log) {
  const World world = load_world(config);
  Outputs out(config.out);
  const std::string method = to_string(config.field.kind);
  for (std::size_t attr : config.attribute_list()) {
    TrainConfig train = config.train;
    train.seed = derive_seed(config.seed, "train", attr);
    Rng rng(train.seed);
    const EditModel model = train_edit(world, attr, train, rng, config.field);
    out.write(checkpoint_name(method, attr), checkpoint_text(model.field));
    out.write(meta_name(method, attr), meta_text({world.params(), attr, model.source, model.target, model.t_max, method}));
    say(log, "train: attr " + std::to_string(attr) + " " + method + ", final loss " + fmt9(tail_mean(model.history, 100)));
  }
  update_manifest(config, "train", out);
}

void run_baseline(const ExperimentConfig& config, std::ostream* log) {
  const World world = load_world(config);
  Outputs out(config.out);
  const std::vector<std::size_t> attrs = config.attribute_list();
  std::vector<LinearDirection> directions;
  for (std::size_t attr : attrs) {
    SvmConfig svm = config.svm;
    svm.seed = derive_seed(config.seed, "baseline", attr);
    Rng rng(svm.seed);
    directions.push_back(fit_interfacegan(world, attr, svm, rng));
  }
  std::ostringstream diag;
  diag << "attribute,train_accuracy,heldout_accuracy,margin\n";
  for (std::size_t i = 0; i < attrs.size(); ++i) {
    LinearDirection n = directions[i];
    if (config.svm_conditioned) {
      std::vector<LinearDirection> others;
      for (std::size_t j = 0; j < directions.size(); ++j) {
        if (j != i) others.push_back(directions[j]);
      }
      n = condition_direction(n, others);
    }
    const int target = world.space().cardinality(attrs[i]) - 1;
    out.write(checkpoint_name(kSvmMethod, attrs[i]), checkpoint_text(to_constant_field(n)));
    out.write(meta_name(kSvmMethod, attrs[i]),
              meta_text({world.params(), attrs[i], 0, target, config.train.t_max, kSvmMethod}));
    diag << attrs[i] << ',' << fmt9(n.train_accuracy) << ',' << fmt9(n.heldout_accuracy) << ',' << fmt9(n.margin)
         << '\n';
    say(log, "baseline: attr " + std::to_string(attrs[i]) + " held-out accuracy " + fmt9(n.heldout_accuracy));
  }
  out.write(kBaselineDiagnostics, diag.str());
  update_manifest(config, "baseline", out);
}

void run_eval(const ExperimentConfig& config, std::ostream* log) {
  const World world = load_world(config);
  const fs::path dir(config.out);
  Outputs out(dir);
  for (std::size_t attr : config.attribute_list()) {
    const std::vector<std::string> methods = methods_for(dir, attr);
    if (methods.empty()) {
      throw FileNotFound("missing input " + (dir / checkpoint_name(to_string(config.field.kind), attr)).string() +
                         " (run train or baseline first)");
    }
    for (const auto& method : methods) {
      const LoadedEdit edit = load_edit(dir, method, attr, world);
      EvalConfig eval = config.eval;
      eval.t_max = edit.meta.t_max;
      // Same seed for every method of an attribute: all curves share starts.
      eval.seed = derive_seed(config.seed, "eval", attr);
      Rng rng(eval.seed);
      const CDCurve curve = cd_curve(world, edit.field, attr, eval, rng);
      std::ostringstream csv;
      write_cd_csv(csv, curve);
      out.write(curve_name(method, attr), csv.str());
      say(log, "eval: attr " + std::to_string(attr) + " " + method + ", C(t_max) " +
                   fmt9(curve.points.back().control));
    }
  }
  update_manifest(config, "eval", out);
}

void run_analyze(const ExperimentConfig& config, std::ostream* log) {
  const World world = load_world(config);
  const fs::path dir(config.out);
  Outputs out(dir);
  const std::string method = to_string(config.field.kind);
  const Eigen::Index k = config.spectral.k > 0 ? config.spectral.k : default_truncation(world.dim());
  std::vector<SpectralReport> reports;
  for (std::size_t attr : config.attribute_list()) {
    const LoadedEdit edit = load_edit(dir, method, attr, world);
    reports.push_back(analyze_field(edit.field, attr, k, config.spectral.fast_threshold));
    say(log, "analyze: attr " + std::to_string(attr) + " H_SVD " + fmt9(reports.back().h_svd) + " (k = " +
                 std::to_string(k) + ")");
  }
  std::ostringstream csv;
  write_spectral_csv(csv, reports);
  out.write(kSpectralFile, csv.str());
  update_manifest(config, "analyze", out);
}

std::vector<CurveFile> find_curves(const fs::path& dir) {
  std::vector<CurveFile> found;
  if (!fs::is_directory(dir)) return found;
  const std::regex pattern("cd_([a-z_]+)_attr([0-9]+)\\.csv");
  for (const auto& entry : fs::directory_iterator(dir)) {
    std::smatch m;
    const std::string name = entry.path().filename().string();
    if (std::regex_match(name, m, pattern)) {
      found.push_back({m[1], static_cast<std::size_t>(std::stoul(m[2])), entry.path()});
    }
  }
  std::sort(found.begin(), found.end(), [](const CurveFile& a, const CurveFile& b) {
    return a.attribute != b.attribute ? a.attribute < b.attribute : a.method < b.method;
  });
  return found;
}

std::string render_cd_svg(const std::vector<std::pair<CurveFile, CDCurve>>& curves) {
  static const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};
  constexpr double panel = 340.0, margin = 50.0, plot = 260.0;

  std::vector<std::size_t> attrs;
  std::vector<std::string> methods;
  for (const auto& [file, curve] : curves) {
    if (std::find(attrs.begin(), attrs.end(), file.attribute) == attrs.end()) attrs.push_back(file.attribute);
    if (std::find(methods.begin(), methods.end(), file.method) == methods.end()) methods.push_back(file.method);
  }
  auto color = [&](const std::string& m) {
    const auto i = static_cast<std::size_t>(std::find(methods.begin(), methods.end(), m) - methods.begin());
    return palette[i % std::size(palette)];
  };

  const double width = panel * static_cast<double>(attrs.size());
  const double height = panel + 20.0 * static_cast<double>(methods.size());
  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
     << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  for (std::size_t p = 0; p < attrs.size(); ++p) {
    const double x0 = panel * static_cast<double>(p) + margin;
    const double y0 = margin / 2.0;
    auto sx = [&](double c) { return x0 + plot * c; };
    auto sy = [&](double d) { return y0 + plot * (1.0 - d); };
    os << "<g>\n<text x=\"" << sx(0.5) << "\" y=\"" << y0 - 8 << "\" text-anchor=\"middle\">attribute " << attrs[p]
       << "</text>\n";
    os << "<rect x=\"" << x0 << "\" y=\"" << y0 << "\" width=\"" << plot << "\" height=\"" << plot
       << "\" fill=\"none\" stroke=\"black\"/>\n";
    for (int t = 0; t <= 4; ++t) {
      const double v = 0.25 * t;
      os << "<line x1=\"" << sx(v) << "\" y1=\"" << sy(0) << "\" x2=\"" << sx(v) << "\" y2=\"" << sy(0) + 4
         << "\" stroke=\"black\"/>"
         << "<text x=\"" << sx(v) << "\" y=\"" << sy(0) + 16 << "\" text-anchor=\"middle\">" << v << "</text>\n";
      os << "<line x1=\"" << sx(0) - 4 << "\" y1=\"" << sy(v) << "\" x2=\"" << sx(0) << "\" y2=\"" << sy(v)
         << "\" stroke=\"black\"/>"
         << "<text x=\"" << sx(0) - 7 << "\" y=\"" << sy(v) + 4 << "\" text-anchor=\"end\">" << v << "</text>\n";
    }
    os << "<text x=\"" << sx(0.5) << "\" y=\"" << sy(0) + 32 << "\" text-anchor=\"middle\">control</text>\n";
    os << "<text transform=\"translate(" << x0 - 36 << ' ' << sy(0.5)
       << ") rotate(-90)\" text-anchor=\"middle\">disentanglement</text>\n";
    for (const auto& [file, curve] : curves) {
      if (file.attribute != attrs[p]) continue;
      os << "<polyline fill=\"none\" stroke-width=\"1.5\" stroke=\"" << color(file.method) << "\" points=\"";
      for (std::size_t i = 0; i < curve.points.size(); ++i) {
        os << (i ? " " : "") << fmt9(sx(curve.points[i].control)) << ',' << fmt9(sy(curve.points[i].disentanglement));
      }
      os << "\"/>\n";
    }
    os << "</g>\n";
  }
  for (std::size_t m = 0; m < methods.size(); ++m) {
    const double y = panel + 20.0 * static_cast<double>(m);
    os << "<line x1=\"" << margin << "\" y1=\"" << y << "\" x2=\"" << margin + 24 << "\" y2=\"" << y
       << "\" stroke-width=\"2\" stroke=\"" << color(methods[m]) << "\"/><text x=\"" << margin + 30 << "\" y=\""
       << y + 4 << "\">" << svg_escape(methods[m]) << "</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

void run_report(const ExperimentConfig& config, std::ostream* log) {
  const fs::path dir(config.out);
  const std::vector<CurveFile> files = find_curves(dir);
  if (files.empty()) throw UsageError("report: no cd_<method>_attr<i>.csv curves in " + dir.string() + " (run eval first)");
  std::vector<std::pair<CurveFile, CDCurve>> curves;
  for (const auto& f : files) {
    std::ifstream in(f.path);
    try {
      curves.emplace_back(f, read_cd_csv(in));
    } catch (const ParseError& e) {
      throw InvalidInput(f.path.string() + ": " + e.what());
    }
    if (curves.back().second.points.empty()) throw InvalidInput(f.path.string() + ": empty curve");
  }
  Outputs out(dir);
  out.write(kSvgFile, render_cd_svg(curves));
  out.write(kSummaryFile, summary_text(curves));
  update_manifest(config, "report", out);
  say(log, "report: " + std::to_string(curves.size()) + " curves -> " + (dir / kSvgFile).string());
}

int run_command(const std::string& command, const RunOptions& options, std::ostream& out, std::ostream& err) {
  static const std::map<std::string, void (*)(const ExperimentConfig&, std::ostream*)> stages = {
      {"worldgen", run_worldgen}, {"train", run_train},     {"baseline", run_baseline},
      {"eval", run_eval},         {"analyze", run_analyze}, {"report", run_report},
  };
  try {
    const auto it = stages.find(command);
    if (it == stages.end()) throw UsageError("unknown command '" + command + "'");
    const ExperimentConfig config = load_config(options);
    it->second(config, options.quiet ? nullptr : &out);
    return 0;
  } catch (const UsageError& e) {
    err << "odeflow: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    err << "odeflow " << command << ": " << e.what() << '\n';
    return 2;
  }
}

}  // namespace odeflow
