#include <gtest/gtest.h>

#include <sys/wait.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "cloud3d/io.hpp"

using namespace cloud3d;
namespace fs = std::filesystem;

namespace {

struct CliRun {
  int status = -1;
  std::string err;
};

class CliTest : public ::testing::Test {
protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() / ("cloud3d_cli_" + std::to_string(std::random_device{}()));
    fs::create_directories(dir_);
  }
  void TearDown() override {
    std::error_code ec;
    fs::remove_all(dir_, ec);
  }

  std::string p(const std::string& name) const { return (dir_ / name).string(); }

  CliRun cli(const std::string& args) const {
    const std::string err = p("stderr.txt");
    const std::string cmd = std::string(CLOUD3D_CLI_PATH) + " " + args + " > " + p("stdout.txt") +
                            " 2> " + err;
    CliRun r;
    const int raw = std::system(cmd.c_str());
    r.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
    r.err = slurp(err);
    return r;
  }

  static std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
  }

  static std::size_t lines(const std::string& path) {
    std::ifstream in(path);
    std::size_t n = 0;
    for (std::string l; std::getline(in, l);) n += !l.empty();
    return n;
  }

  void synth(const std::string& tag, int n, int seed) const {
    const CliRun r = cli("synth --profiles " + std::to_string(n) + " --seed " + std::to_string(seed) +
                      " --out-profiles " + p(tag + "_p.jsonl") + " --out-lw " + p(tag + "_lw.jsonl") +
                      " --out-sw " + p(tag + "_sw.jsonl"));
    ASSERT_EQ(r.status, 0) << r.err;
  }

  fs::path dir_;
};

}  // namespace

TEST_F(CliTest, SynthIsByteIdenticalForSameSeed) {
  synth("a", 6, 7);
  synth("b", 6, 7);
  for (const char* f : {"_p.jsonl", "_lw.jsonl", "_sw.jsonl"}) {
    EXPECT_EQ(slurp(p(std::string("a") + f)), slurp(p(std::string("b") + f))) << f;
  }
  EXPECT_EQ(lines(p("a_p.jsonl")), 6u);
  synth("c", 6, 8);
  EXPECT_NE(slurp(p("a_p.jsonl")), slurp(p("c_p.jsonl")));
}

TEST_F(CliTest, SynthRecomputesTruthForGivenProfiles) {
  synth("a", 4, 1);
  const CliRun r = cli("synth --profiles-in " + p("a_p.jsonl") + " --out-lw " + p("r_lw.jsonl") +
                    " --out-sw " + p("r_sw.jsonl"));
  ASSERT_EQ(r.status, 0) << r.err;
  EXPECT_EQ(slurp(p("r_lw.jsonl")), slurp(p("a_lw.jsonl")));
}

TEST_F(CliTest, AugmentWritesOriginalsPlusCopies) {
  synth("a", 5, 2);
  const CliRun r = cli("augment --in " + p("a_p.jsonl") + " --out " + p("aug.jsonl") + " --copies 9");
  ASSERT_EQ(r.status, 0) << r.err;
  const auto recs = io::read_profiles(p("aug.jsonl"));
  ASSERT_EQ(recs.size(), 50u);
  EXPECT_EQ(recs[5].id, "0#1");
  const auto orig = io::read_profiles(p("a_p.jsonl"));
  EXPECT_EQ(recs[7].profile.temperature, orig[2].profile.temperature);
}

TEST_F(CliTest, CorrectWithZeroEffectReproducesBaseline) {
  synth("a", 3, 3);
  const auto base = io::read_fluxes(p("a_sw.jsonl"));
  std::vector<io::FluxRecord> zero = base;
  for (auto& z : zero) {
    std::fill(z.fluxes.up.begin(), z.fluxes.up.end(), 0.0);
    std::fill(z.fluxes.down.begin(), z.fluxes.down.end(), 0.0);
    std::fill(z.fluxes.direct_down->begin(), z.fluxes.direct_down->end(), 0.0);
    z.fluxes.heat.clear();
  }
  io::write_fluxes(p("zero.jsonl"), zero, false);
  const CliRun r = cli("correct --profiles " + p("a_p.jsonl") + " --baseline " + p("a_sw.jsonl") +
                    " --effects " + p("zero.jsonl") + " --out " + p("out.jsonl"));
  ASSERT_EQ(r.status, 0) << r.err;
  const auto out = io::read_fluxes(p("out.jsonl"));
  ASSERT_EQ(out.size(), base.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    EXPECT_EQ(out[i].id, base[i].id);
    EXPECT_EQ(out[i].fluxes.up, base[i].fluxes.up);
    EXPECT_EQ(out[i].fluxes.down, base[i].fluxes.down);
    EXPECT_EQ(out[i].fluxes.direct_down, base[i].fluxes.direct_down);
  }
}

TEST_F(CliTest, ErrorsAreOneLineWithLocus) {
  synth("a", 2, 4);
  std::string text = slurp(p("a_p.jsonl"));
  text += "{\"id\": \"broken\"}\n";
  std::ofstream(p("bad.jsonl")) << text;
  const CliRun r = cli("augment --in " + p("bad.jsonl") + " --out " + p("x.jsonl"));
  EXPECT_NE(r.status, 0);
  EXPECT_EQ(r.err.rfind("error: ", 0), 0u) << r.err;
  EXPECT_NE(r.err.find("bad.jsonl:3"), std::string::npos) << r.err;
  EXPECT_EQ(std::count(r.err.begin(), r.err.end(), '\n'), 1);
  EXPECT_FALSE(fs::exists(p("x.jsonl")));

  const CliRun u = cli("augment --in " + p("a_p.jsonl") + " --out " + p("x.jsonl") + " --copies -1");
  EXPECT_NE(u.status, 0);
  EXPECT_EQ(u.err.rfind("error: ", 0), 0u) << u.err;

  const CliRun m = cli("bogus");
  EXPECT_NE(m.status, 0);
  EXPECT_EQ(m.err.rfind("error: ", 0), 0u) << m.err;
}

TEST_F(CliTest, ConfigFileAndFlagPrecedence) {
  synth("a", 4, 5);
  std::ofstream(p("cfg.json")) << R"({"copies": 2, "seed": 3})";
  ASSERT_EQ(cli("augment --config " + p("cfg.json") + " --in " + p("a_p.jsonl") + " --out " + p("x.jsonl")).status, 0);
  EXPECT_EQ(lines(p("x.jsonl")), 12u);
  ASSERT_EQ(cli("augment --config " + p("cfg.json") + " --copies 1 --in " + p("a_p.jsonl") + " --out " +
                p("y.jsonl")).status, 0);
  EXPECT_EQ(lines(p("y.jsonl")), 8u);

  std::ofstream(p("bad.json")) << R"({"copiez": 2})";
  const CliRun r = cli("augment --config " + p("bad.json") + " --in " + p("a_p.jsonl") + " --out " + p("z.jsonl"));
  EXPECT_NE(r.status, 0);
  EXPECT_NE(r.err.find("copiez"), std::string::npos) << r.err;
}

TEST_F(CliTest, TrainPredictEvalBenchPipeline) {
  synth("a", 20, 6);
  const std::string common = " --profiles " + p("a_p.jsonl") + " --max-epochs 3 --hidden 8,8 --batch-size 4";
  CliRun r = cli("train --component lw --effects " + p("a_lw.jsonl") + " --out " + p("lw.json") + common);
  ASSERT_EQ(r.status, 0) << r.err;
  r = cli("train --component sw --effects " + p("a_sw.jsonl") + " --out " + p("sw.json") + common);
  ASSERT_EQ(r.status, 0) << r.err;

  const MlpModel lw = io::read_model(p("lw.json"));
  EXPECT_EQ(lw.training.train_ids.size(), 12u);
  EXPECT_EQ(lw.training.val_ids.size(), 4u);
  EXPECT_EQ(lw.training.test_ids.size(), 4u);
  EXPECT_EQ(lw.network.hidden_widths(), (std::vector<Eigen::Index>{8, 8}));

  r = cli("predict --lw-model " + p("lw.json") + " --sw-model " + p("sw.json") + " --profiles " +
          p("a_p.jsonl") + " --out-lw " + p("pl.jsonl") + " --out-sw " + p("ps.jsonl") + " --threads 2");
  ASSERT_EQ(r.status, 0) << r.err;
  EXPECT_EQ(lines(p("pl.jsonl")), 20u);

  r = cli("eval --profiles " + p("a_p.jsonl") + " --truth " + p("a_lw.jsonl") + " --pred " + p("pl.jsonl") +
          " --model " + p("lw.json") + " --subset test --out " + p("rep.json") + " --levels-csv " + p("lev.csv"));
  ASSERT_EQ(r.status, 0) << r.err;
  const auto rep = io::read_json(p("rep.json"));
  EXPECT_EQ(rep["profiles"], 4);
  EXPECT_TRUE(rep["quantities"].contains("heat_K_per_day"));
  EXPECT_EQ(lines(p("lev.csv")), 1u + 138 + 138 + 137);

  r = cli("bench --lw-model " + p("lw.json") + " --sw-model " + p("sw.json") + " --profiles " +
          p("a_p.jsonl") + " --repeats 3 --replication 2 --out " + p("bench.json"));
  ASSERT_EQ(r.status, 0) << r.err;
  const auto b = io::read_json(p("bench.json"));
  EXPECT_EQ(b["profiles_per_repeat"], 40);
  EXPECT_EQ(b["repeats"], 3);
  EXPECT_TRUE(b["hardware"].contains("threads"));
  EXPECT_GT(b["mean_ms_per_profile"].get<double>(), 0.0);

  // Mixing up the components is a schema error.
  r = cli("predict --lw-model " + p("sw.json") + " --sw-model " + p("sw.json") + " --profiles " +
          p("a_p.jsonl") + " --out-lw " + p("q1.jsonl") + " --out-sw " + p("q2.jsonl"));
  EXPECT_NE(r.status, 0);
  EXPECT_NE(r.err.find("sw.json"), std::string::npos) << r.err;
}

TEST_F(CliTest, GridSearchWritesReport) {
  synth("a", 15, 9);
  const CliRun r = cli("grid-search --component sw --profiles " + p("a_p.jsonl") + " --effects " +
                    p("a_sw.jsonl") + " --out " + p("grid.json") +
                    " --inputs 6 --layers 1,2 --width-multipliers 0.05 --regularization 1e-5"
                    " --repeats 2 --max-epochs 2 --batch-size 8");
  ASSERT_EQ(r.status, 0) << r.err;
  const auto j = io::read_json(p("grid.json"));
  EXPECT_EQ(j["rows"].size(), 2u);
  EXPECT_EQ(j["runs"], 4);
  EXPECT_TRUE(j["settings"].contains("max_epochs"));
  EXPECT_FALSE(j["selected"].is_null());
}
