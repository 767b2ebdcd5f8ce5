#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "odeflow/pipeline.hpp"

using namespace odeflow;
namespace fs = std::filesystem;

namespace {

// Fresh directory under the system temp dir, removed on scope exit.
struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / ("odeflow_test_" + name)) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

int line_of(const std::string& text) {
  try {
    (void)parse_config(text);
  } catch (const ParseError& e) {
    return static_cast<int>(e.line());
  }
  return 0;
}

const char* kTinyConfig = R"(# small end-to-end run
[world]
variant = blobs
dim = 3

[train]
field = net
depth = 1
iterations = 40
batch_size = 8

[eval]
samples = 64
grid = 7
traj_samples = 8
n_steps = 32

[svm]
codes = 400
epochs = 5

[run]
seed = 17
)";

struct Run {
  TempDir dir;
  RunOptions options;
  std::ostringstream out, err;

  explicit Run(const std::string& name, const std::string& config = kTinyConfig) : dir(name) {
    const fs::path cfg = dir.path / "run.cfg";
    std::ofstream(cfg) << config;
    options.config_path = cfg.string();
    options.out = (dir.path / "out").string();
    options.quiet = true;
  }

  int operator()(const std::string& command) { return run_command(command, options, out, err); }
  fs::path file(const std::string& name) const { return fs::path(*options.out) / name; }
};

}  // namespace

TEST_CASE("empty config gives the documented defaults") {
  const ExperimentConfig c = parse_config("");
  CHECK(c.world.variant == WorldVariant::Blobs);
  CHECK(c.world.dim == 8);
  CHECK(c.field.kind == FieldKind::Net);
  CHECK(c.field.depth == 1);
  CHECK(c.train.iterations == 5000);
  CHECK(c.train.batch_size == 24);
  CHECK(c.train.t_max == 12.0);
  CHECK(c.train.n_steps == 64);
  CHECK(c.train.adam.learning_rate == 1e-3);
  CHECK(c.eval.samples == 1024);
  CHECK(c.eval.n_steps == 256);
  CHECK(c.spectral.fast_threshold == 5.0);
  CHECK(c.attributes.empty());
  CHECK_NOTHROW(c.validate());
}

TEST_CASE("config values") {
  const ExperimentConfig c = parse_config(
      "[train]\niterations = 5000\nfield = constant\n# comment\n\n[world]\nvariant = xor   # trailing\ndim = 2\n"
      "[run]\nattributes = 1,0\nseed = 123\n[svm]\nconditioned = true\n[train]\nrestarts = 3\n");
  CHECK(c.train.iterations == 5000);
  CHECK(c.train.restarts == 3);
  CHECK(c.field.kind == FieldKind::Constant);
  CHECK(c.world.variant == WorldVariant::Xor);
  CHECK(c.world.dim == 2);
  CHECK(c.attributes == std::vector<std::size_t>{1, 0});
  CHECK(c.seed == 123);
  CHECK(c.svm_conditioned);
  CHECK(c.train.seed == 123);
}

TEST_CASE("config errors name the line") {
  CHECK(line_of("[train]\niterations = abc\n") == 2);
  CHECK(line_of("[train]\nbogus = 1\n") == 2);
  CHECK(line_of("[train]\niterations = 5\n\niterations = 6\n") == 4);
  CHECK(line_of("[nowhere]\n") == 1);
  CHECK(line_of("iterations = 5\n") == 1);
  CHECK(line_of("[train]\njust words\n") == 2);
  CHECK(line_of("[world\n") == 1);
  CHECK(line_of("[world]\nvariant = moebius\n") == 2);
  CHECK(line_of("[train]\nfield = spline\n") == 2);
  CHECK(line_of("[train]\niterations = -3\n") == 2);
  CHECK(line_of("[train]\nt_max = 1e999\n") == 2);
  CHECK(line_of("[svm]\nconditioned = yes\n") == 2);
  CHECK(line_of("[run]\nattributes = 0,,1\n") == 2);
}

TEST_CASE("config validation") {
  ExperimentConfig c = parse_config("[world]\nvariant = blobs\n[run]\nattributes = 2\n");
  CHECK_THROWS_AS(c.validate(), InvalidInput);
  c = parse_config("[run]\nattributes = 0,0\n");
  CHECK_THROWS_AS(c.validate(), InvalidInput);
  c = parse_config("[world]\ndim = 1\n");
  CHECK_THROWS_AS(c.validate(), InvalidInput);
  c = parse_config("[train]\ndepth = 4\n");
  CHECK_THROWS_AS(c.validate(), InvalidInput);
  c = parse_config("[train]\nrestarts = 0\n");
  CHECK_THROWS_AS(c.validate(), InvalidInput);
  c = parse_config("[spectral]\nk = 9\n");
  CHECK_THROWS_AS(c.validate(), InvalidInput);
}

TEST_CASE("canonical text round trips") {
  ExperimentConfig c = parse_config(kTinyConfig);
  c.world.beta = 0.1 + 0.2;
  c.attributes = {1};
  const std::string text = to_config_text(c);
  const ExperimentConfig back = parse_config(text);
  CHECK(to_config_text(back) == text);
  CHECK(back.world == c.world);
  CHECK(back.attributes == c.attributes);
  CHECK(parse_config(world_config_text(c.world)).world == c.world);
}

TEST_CASE("derived seeds are stable and separate stages") {
  CHECK(derive_seed(1, "train", 0) == derive_seed(1, "train", 0));
  CHECK(derive_seed(1, "train", 0) != derive_seed(1, "train", 1));
  CHECK(derive_seed(1, "train", 0) != derive_seed(1, "eval", 0));
  CHECK(derive_seed(1, "train", 0) != derive_seed(2, "train", 0));
}

TEST_CASE("FNV-1a reference values") {
  CHECK(fnv1a_hex("") == "cbf29ce484222325");
  CHECK(fnv1a_hex("a") == "af63dc4c8601ec8c");
  CHECK(fnv1a_hex("foobar") == "85944171f73967e8");
}

TEST_CASE("checkpoint sidecar round trips") {
  EditMeta m;
  m.world.variant = WorldVariant::Wheel;
  m.world.dim = 5;
  m.attribute = 1;
  m.source = 0;
  m.target = 1;
  m.t_max = 7.25;
  m.method = "net";
  const EditMeta back = parse_meta(meta_text(m));
  CHECK(back.world == m.world);
  CHECK(back.attribute == 1);
  CHECK(back.t_max == 7.25);
  CHECK(back.method == "net");
  CHECK(meta_text(back) == meta_text(m));
  CHECK_THROWS_AS(parse_meta(world_config_text(m.world)), ParseError);
  CHECK_THROWS_AS(parse_meta(meta_text(m) + "extra = 1\n"), ParseError);
}

TEST_CASE("load_config applies overrides and reports usage errors") {
  TempDir dir("load");
  const fs::path cfg = dir.path / "c.cfg";
  std::ofstream(cfg) << "[run]\nseed = 4\nout = somewhere\n";
  RunOptions o;
  o.config_path = cfg.string();
  CHECK(load_config(o).seed == 4);
  o.seed = 9;
  o.out = "elsewhere";
  const ExperimentConfig c = load_config(o);
  CHECK(c.seed == 9);
  CHECK(c.out == "elsewhere");
  CHECK(c.eval.seed == 9);

  std::ofstream(cfg) << "[train]\niterations = abc\n";
  CHECK_THROWS_AS(load_config(o), UsageError);
  o.config_path = (dir.path / "missing.cfg").string();
  CHECK_THROWS_AS(load_config(o), UsageError);
}

TEST_CASE("full pipeline") {
  Run run("pipeline");
  for (const char* stage : {"worldgen", "train", "baseline", "eval", "analyze", "report"}) {
    INFO(stage << ": " << run.err.str());
    REQUIRE(run(stage) == 0);
  }
  for (const char* name : {"world.cfg", "world_samples.csv", "net_attr0.ckpt", "net_attr1.meta", "svm_attr1.ckpt",
                           "cd_net_attr0.csv", "cd_svm_attr1.csv", "spectral.csv", "cd_curves.svg", "summary.txt"}) {
    CHECK_MESSAGE(fs::exists(run.file(name)), name);
  }

  SUBCASE("manifest lists every output with its hash") {
    const auto manifest = nlohmann::json::parse(read_file(run.file("manifest.json")));
    CHECK(manifest["tool"] == "odeflow");
    CHECK(manifest["version"] == kToolVersion);
    CHECK(manifest.contains("created"));
    CHECK(manifest["config"].get<std::string>().find("seed = 17") != std::string::npos);
    std::size_t listed = 0;
    for (const auto& f : manifest["files"]) {
      const fs::path p = run.file(f["path"].get<std::string>());
      REQUIRE(fs::exists(p));
      CHECK(f["fnv1a64"] == fnv1a_hex(read_file(p)));
      ++listed;
    }
    std::size_t on_disk = 0;
    for (const auto& e : fs::directory_iterator(*run.options.out)) on_disk += e.path().filename() != "manifest.json";
    CHECK(listed == on_disk);
  }

  SUBCASE("curves are well formed") {
    for (const auto& f : find_curves(*run.options.out)) {
      std::ifstream in(f.path);
      const CDCurve c = read_cd_csv(in);
      CHECK_NOTHROW(c.validate());
      CHECK(c.points.front().disentanglement == 0.0);
    }
  }

  SUBCASE("SVG has one panel per attribute and one line per curve") {
    const std::string svg = read_file(run.file("cd_curves.svg"));
    CHECK(svg.rfind("<svg", 0) == 0);
    std::size_t lines = 0;
    for (std::size_t pos = svg.find("<polyline"); pos != std::string::npos; pos = svg.find("<polyline", pos + 1)) ++lines;
    CHECK(lines == 4);
    CHECK(svg.find("attribute 1") != std::string::npos);
  }
}

TEST_CASE("repeated runs are byte-identical") {
  Run a("det_a"), b("det_b");
  for (const char* stage : {"worldgen", "train", "eval"}) {
    REQUIRE(a(stage) == 0);
    REQUIRE(b(stage) == 0);
  }
  for (const char* name : {"net_attr0.ckpt", "net_attr1.ckpt", "cd_net_attr0.csv", "cd_net_attr1.csv",
                           "world_samples.csv"}) {
    CHECK_MESSAGE(read_file(a.file(name)) == read_file(b.file(name)), name);
  }
}

TEST_CASE("constant checkpoint and baseline direction give the same CSV") {
  Run run("constant_vs_svm");
  REQUIRE(run("worldgen") == 0);
  REQUIRE(run("baseline") == 0);
  // a CONSTANT checkpoint with the same direction, as `train` would write it
  fs::copy_file(run.file("svm_attr0.ckpt"), run.file("constant_attr0.ckpt"));
  EditMeta meta = parse_meta(read_file(run.file("svm_attr0.meta")));
  meta.method = "constant";
  write_atomic(run.file("constant_attr0.meta"), meta_text(meta));
  REQUIRE(run("eval") == 0);
  CHECK(read_file(run.file("cd_constant_attr0.csv")) == read_file(run.file("cd_svm_attr0.csv")));
}

TEST_CASE("error exits") {
  SUBCASE("report with no curves is a usage error and writes nothing") {
    Run run("no_curves");
    REQUIRE(run("worldgen") == 0);
    CHECK(run("report") == 1);
    CHECK_FALSE(fs::exists(run.file("cd_curves.svg")));
    CHECK_FALSE(fs::exists(run.file("summary.txt")));
  }
  SUBCASE("missing upstream input names the expected path") {
    Run run("missing");
    CHECK(run("train") == 2);
    CHECK(run.err.str().find("world.cfg") != std::string::npos);
    REQUIRE(run("worldgen") == 0);
    CHECK(run("eval") == 2);
    CHECK(run.err.str().find("net_attr0.ckpt") != std::string::npos);
  }
  SUBCASE("checkpoint version mismatch") {
    Run run("version");
    REQUIRE(run("worldgen") == 0);
    REQUIRE(run("baseline") == 0);
    std::string text = read_file(run.file("svm_attr0.ckpt"));
    text.replace(text.find("v1"), 2, "v9");
    write_atomic(run.file("svm_attr0.ckpt"), text);
    CHECK(run("eval") == 2);
    CHECK(run.err.str().find("version") != std::string::npos);
  }
  SUBCASE("bad config and unknown command are usage errors") {
    Run run("bad_config", "[train]\niterations = abc\n");
    CHECK(run("train") == 1);
    CHECK(run.err.str().find("line 2") != std::string::npos);
    Run other("unknown");
    CHECK(other("frobnicate") == 1);
  }
  SUBCASE("world changed after worldgen") {
    Run run("changed");
    REQUIRE(run("worldgen") == 0);
    std::ofstream(run.options.config_path) << "[world]\nvariant = ring\ndim = 3\n";
    CHECK(run("train") == 2);
  }
  SUBCASE("spectral analysis of a constant field is a runtime failure") {
    Run run("constant_analyze");
    std::string cfg = kTinyConfig;
    cfg.replace(cfg.find("field = net"), 11, "field = constant");
    std::ofstream(run.options.config_path) << cfg;
    REQUIRE(run("worldgen") == 0);
    REQUIRE(run("train") == 0);
    CHECK(run("analyze") == 2);
    CHECK_FALSE(fs::exists(run.file("spectral.csv")));
  }
}
