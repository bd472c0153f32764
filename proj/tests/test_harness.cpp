#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <sstream>

#include "acerax/commands.hpp"

using namespace acerax;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("acerax_harness_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

Config quick(const std::string& env = "lqr2") {
  Config c = preset_config("desk");
  c.env = env;
  c.steps = 600;
  c.eval_interval = 200;
  return c;
}

struct EnvGuard {
  std::string name;
  explicit EnvGuard(std::string n, const char* value) : name(std::move(n)) {
    if (value)
      setenv(name.c_str(), value, 1);
    else
      unsetenv(name.c_str());
  }
  ~EnvGuard() { unsetenv(name.c_str()); }
};

}  // namespace

TEST(ConfigText, RoundTripsEveryKey) {
  Config c = preset_config("full");
  c.mode = ExplorationMode::fixed_sigma;
  c.sigma = {0.3, 0.7};
  c.gamma = 0.1 + 0.2;
  Config back;
  apply_config_text(back, config_text(c));
  EXPECT_EQ(config_values(back), config_values(c));
  EXPECT_EQ(back.gamma, c.gamma);
}

TEST(ConfigText, ErrorsCarrySourceAndLine) {
  Config c;
  try {
    apply_config_text(c, "[run]\nseed = 3\n\nbogus = 1\n", "x.ini");
    FAIL();
  } catch (const config_error& e) {
    EXPECT_NE(std::string(e.what()).find("x.ini:4"), std::string::npos) << e.what();
    EXPECT_NE(std::string(e.what()).find("bogus"), std::string::npos);
  }
  EXPECT_THROW(apply_config_text(c, "gamma = 1.5"), config_error);
  EXPECT_THROW(apply_config_text(c, "[algorithm]\nseed = 2"), config_error);
  EXPECT_THROW(apply_config_text(c, "[nowhere]"), config_error);
  EXPECT_THROW(apply_config_text(c, "n = 2.5"), config_error);
  EXPECT_THROW(apply_config_text(c, "mode = greedy"), config_error);
}

TEST(ConfigText, CommentsAndCrlfIgnored) {
  Config c;
  apply_config_text(c, "# comment\r\n[algorithm]\r\nalpha = 0.5  \r\n; other\r\n");
  EXPECT_EQ(c.alpha, 0.5);
}

TEST(Defaults, AlphaAndFixedSigma) {
  const Config c;
  EXPECT_EQ(c.alpha, 0.1);
  EXPECT_EQ(c.mode, ExplorationMode::adaptive);
  ASSERT_EQ(c.sigma.size(), 1u);
  EXPECT_EQ(c.sigma[0], 0.4);
}

TEST(ResolveConfig, Precedence) {
  const fs::path dir = scratch("precedence");
  {
    std::ofstream(dir / "c.ini") << "[run]\nsteps = 77\n";
  }
  EnvGuard seed("ACERAX_SEED", "9");
  ConfigSources src;
  src.preset = "desk";
  EXPECT_EQ(resolve_config(src).seed, 9u);
  src.config_path = (dir / "c.ini").string();
  EXPECT_EQ(resolve_config(src).steps, 77);
  src.overrides = {{"steps", "5"}, {"seed", "4"}};
  const Config c = resolve_config(src);
  EXPECT_EQ(c.steps, 5);
  EXPECT_EQ(c.seed, 4u);
  EXPECT_EQ(c.shapes.eta, std::vector<int>({4, 3}));
}

TEST(ResolveConfig, BadSeedVariableRejected) {
  EnvGuard seed("ACERAX_SEED", "abc");
  EXPECT_THROW(resolve_config({}), config_error);
}

TEST(OutputRoot, Precedence) {
  {
    EnvGuard out("ACERAX_OUT", nullptr);
    EXPECT_EQ(output_root(std::nullopt), "acerax_out");
  }
  EnvGuard out("ACERAX_OUT", "/tmp/from_env");
  EXPECT_EQ(output_root(std::nullopt), "/tmp/from_env");
  EXPECT_EQ(output_root(std::string("given")), "given");
}

TEST(Metrics, HeaderAndLineEndings) {
  const fs::path dir = scratch("metrics");
  std::ostringstream out, err;
  ASSERT_EQ(cmd_train(quick(), dir.string(), out, err, "hash"), 0) << err.str();
  const std::string csv = read_file_bytes((dir / "metrics.csv").string());
  EXPECT_EQ(csv.rfind("step,mean_return,std_return,min_eta,max_eta,critic_loss,dispersion_loss,actor_term\n", 0), 0u);
  EXPECT_EQ(csv.find('\r'), std::string::npos);
  EXPECT_EQ(csv.back(), '\n');
  const auto rows = read_metrics_csv((dir / "metrics.csv").string());
  ASSERT_EQ(rows.size(), 4u);
  EXPECT_EQ(rows.back().step, 600);
  EXPECT_TRUE(fs::exists(dir / "checkpoint.bin"));
  EXPECT_TRUE(fs::exists(dir / "manifest.json"));
}

TEST(Train, ByteIdenticalRerunAndManifestReplay) {
  const fs::path a = scratch("train_a"), b = scratch("train_b"), c = scratch("train_c");
  std::ostringstream out, err;
  const Config config = quick("pointmass");
  ASSERT_EQ(cmd_train(config, a.string(), out, err, "hash"), 0);
  ASSERT_EQ(cmd_train(config, b.string(), out, err, "hash"), 0);
  EXPECT_EQ(read_file_bytes((a / "metrics.csv").string()), read_file_bytes((b / "metrics.csv").string()));
  EXPECT_EQ(read_file_bytes((a / "checkpoint.bin").string()), read_file_bytes((b / "checkpoint.bin").string()));

  const RunManifest m = read_manifest((a / "manifest.json").string());
  EXPECT_EQ(m.binary_hash, "hash");
  EXPECT_EQ(config_values(m.config), config_values(config));
  ASSERT_EQ(cmd_train(m.config, c.string(), out, err, "hash"), 0);
  EXPECT_EQ(read_file_bytes((a / "metrics.csv").string()), read_file_bytes((c / "metrics.csv").string()));
}

TEST(Manifest, MissingFileIsLoadError) {
  EXPECT_THROW(read_manifest("/nonexistent/manifest.json"), load_error);
}

TEST(BinaryHash, GitBlobOfKnownContents) {
  // `printf 'hello\n' | git hash-object --stdin`
  EXPECT_EQ(git_blob_hash("hello\n"), "ce013625030ba8dba906f756967f9e9ca394464a");
  EXPECT_EQ(current_binary_hash().size(), 40u);
}

TEST(Sweep, EmptyValueSetSucceeds) {
  const fs::path dir = scratch("sweep_empty");
  std::ostringstream out, err;
  SweepSpec spec;
  spec.param = "alpha";
  EXPECT_EQ(cmd_sweep(quick(), spec, dir.string(), out, err, "hash"), 0);
}

TEST(Sweep, UnknownParameterIsUsageError) {
  std::ostringstream out, err;
  SweepSpec spec;
  spec.param = "nope";
  spec.values = {"1"};
  EXPECT_EQ(cmd_sweep(quick(), spec, scratch("sweep_bad").string(), out, err, "hash"), 2);
}

TEST(Sweep, FailedCellReportedAndSummariesMatchCells) {
  const fs::path dir = scratch("sweep");
  std::ostringstream out, err;
  SweepSpec spec;
  spec.param = "alpha";
  spec.values = {"0", "-1", "1"};
  spec.seeds = {1, 2};
  spec.jobs = 2;
  EXPECT_EQ(cmd_sweep(quick(), spec, dir.string(), out, err, "hash"), 1);
  EXPECT_NE(err.str().find("alpha=-1"), std::string::npos);

  std::vector<SweepCell> cells;
  for (const auto& v : spec.values)
    for (auto s : spec.seeds) {
      SweepCell cell;
      cell.value = v;
      cell.seed = s;
      const fs::path csv = dir / ("alpha_" + v) / ("seed_" + std::to_string(s)) / "metrics.csv";
      cell.ok = fs::exists(csv);
      if (cell.ok) cell.final_row = read_metrics_csv(csv.string()).back();
      cells.push_back(cell);
    }
  EXPECT_FALSE(cells[2].ok);
  EXPECT_FALSE(cells[3].ok);

  std::string summary = std::string(kSweepSummaryHeader) + "\n";
  for (const auto& c : cells) summary += sweep_summary_line("alpha", c) + "\n";
  EXPECT_EQ(read_file_bytes((dir / "summary.csv").string()), summary);

  std::string by_value = std::string(kSweepByValueHeader) + "\n";
  for (const auto& l : sweep_by_value_lines("alpha", spec.values, cells)) by_value += l + "\n";
  EXPECT_EQ(read_file_bytes((dir / "summary_by_value.csv").string()), by_value);
  EXPECT_NE(by_value.find("alpha,-1,0,"), std::string::npos);

  // cells are independent of the thread count
  const fs::path serial = scratch("sweep_serial");
  spec.jobs = 1;
  spec.values = {"1"};
  cmd_sweep(quick(), spec, serial.string(), out, err, "hash");
  EXPECT_EQ(read_file_bytes((dir / "alpha_1/seed_2/metrics.csv").string()),
            read_file_bytes((serial / "alpha_1/seed_2/metrics.csv").string()));
}

TEST(SweepByValue, PopulationStatistics) {
  std::vector<SweepCell> cells(2);
  cells[0].value = cells[1].value = "x";
  cells[0].ok = cells[1].ok = true;
  cells[0].final_row.mean_return = -1;
  cells[1].final_row.mean_return = -3;
  const auto lines = sweep_by_value_lines("p", {"x"}, cells);
  ASSERT_EQ(lines.size(), 1u);
  EXPECT_EQ(lines[0].rfind("p,x,2,-2,1,", 0), 0u) << lines[0];
}

TEST(Eval, RiccatiReferenceMatchesOracle) {
  const fs::path dir = scratch("eval_riccati");
  std::ostringstream out, err;
  Config c = quick();
  ASSERT_EQ(cmd_eval(c, "riccati", 5, dir.string(), out, err), 0) << err.str();
  LqrEnv env;
  const EvalResult oracle = evaluate_lqr2_oracle(env, 5, c.seed);
  EXPECT_NE(out.str().find(detail::format_real(oracle.mean_return)), std::string::npos) << out.str();
  const std::string first = out.str();
  out.str("");
  ASSERT_EQ(cmd_eval(c, "riccati", 5, dir.string(), out, err), 0);
  EXPECT_EQ(out.str(), first);
  c.env = "pointmass";
  EXPECT_EQ(cmd_eval(c, "riccati", 5, dir.string(), out, err), 2);
}

TEST(Eval, BadInputsExitTwo) {
  const fs::path dir = scratch("eval_bad");
  std::ostringstream out, err;
  ASSERT_EQ(cmd_train(quick(), dir.string(), out, err, "hash"), 0);
  const std::string ckpt = (dir / "checkpoint.bin").string();
  EXPECT_EQ(cmd_eval(quick(), ckpt, 0, dir.string(), out, err), 2);
  EXPECT_EQ(cmd_eval(quick(), (dir / "missing.bin").string(), 3, dir.string(), out, err), 2);
  Config other = quick();
  other.shapes.mu = {16};
  EXPECT_EQ(cmd_eval(other, ckpt, 3, dir.string(), out, err), 2);
  EXPECT_NE(err.str().find("shape"), std::string::npos);

  out.str("");
  ASSERT_EQ(cmd_eval(quick(), ckpt, 3, dir.string(), out, err), 0);
  const std::string first = out.str();
  out.str("");
  ASSERT_EQ(cmd_eval(quick(), ckpt, 3, dir.string(), out, err), 0);
  EXPECT_EQ(out.str(), first);
}

TEST(Gradcheck, ReportsEveryLoss) {
  std::ostringstream out, err;
  GradientSuiteOptions options;
  options.draws = 3;
  EXPECT_EQ(cmd_gradcheck(quick(), options, out, err), 0) << out.str() << err.str();
  for (const char* name : {"critic", "actor", "dispersion"}) EXPECT_NE(out.str().find(name), std::string::npos);
  EXPECT_NE(out.str().find("gradcheck passed"), std::string::npos);
  options.tamper = [](std::string_view loss, FlatGradient& g) {
    if (loss == "actor") g.values *= 1.01;
  };
  out.str("");
  EXPECT_EQ(cmd_gradcheck(quick(), options, out, err), 1);
}
