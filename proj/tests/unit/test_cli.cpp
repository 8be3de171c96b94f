#include "cli.hpp"
#include "decap/jsonl.hpp"
#include "decap/pipeline.hpp"
#include "test_support.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <fstream>
#include <sstream>

using decap::testing::fixture;
namespace fs = std::filesystem;

namespace {

struct CliRun {
  int code;
  std::string out;
  std::string err;
};

CliRun cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = decap::cli::run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

std::vector<std::string> mock_flags() {
  return {"--dataset", fixture("minibench/minibench.jsonl").string(), "--corpus",
          fixture("minibench/neutral_corpus.jsonl").string(), "--backend", "mock", "--mock-script",
          fixture("minibench/mock_script.json").string(), "--model-name", "mock"};
}

std::size_t line_count(const std::string& text) { return static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n')); }

}  // namespace

TEST(Cli, ValidateClean) {
  const auto r = cli({"validate", "--dataset", fixture("minibench/minibench.jsonl").string()});
  EXPECT_EQ(r.code, decap::cli::kExitOk);
  EXPECT_NE(r.out.find("24 records, 0 issues"), std::string::npos);
}

TEST(Cli, ValidateReportsIssues) {
  const auto path = decap::testing::scratch_dir("cli-validate") / "bad.jsonl";
  std::ofstream(path) << "{broken\n";
  const auto r = cli({"validate", "--dataset", path.string()});
  EXPECT_EQ(r.code, decap::cli::kExitValidation);
  EXPECT_NE(r.out.find("1 issues"), std::string::npos);
}

TEST(Cli, UsageErrors) {
  EXPECT_EQ(cli({}).code, decap::cli::kExitConfig);
  EXPECT_EQ(cli({"frobnicate"}).code, decap::cli::kExitConfig);
  EXPECT_EQ(cli({"validate", "--no-such-flag", "x"}).code, decap::cli::kExitConfig);
  EXPECT_EQ(cli({"validate"}).code, decap::cli::kExitConfig);
  auto bad_mode = mock_flags();
  bad_mode.insert(bad_mode.begin(), {"run", "--out", "/tmp/decap-test-never", "--mode", "nonsense"});
  EXPECT_EQ(cli(bad_mode).code, decap::cli::kExitConfig);
}

TEST(Cli, RunSeveralModesThenReport) {
  const auto out = decap::testing::scratch_dir("cli-run");
  auto args = mock_flags();
  args.insert(args.begin(), {"run", "--out", out.string(), "--mode", "base,decap", "--seeds", "0,1,2"});
  const auto r = cli(args);
  ASSERT_EQ(r.code, decap::cli::kExitOk) << r.err;
  EXPECT_EQ(line_count(r.out), 2u);
  for (const char* mode : {"base", "decap"}) {
    for (const char* name :
         {decap::run_files::kConfig, decap::run_files::kDetections, decap::run_files::kGuidance,
          decap::run_files::kPrompts, decap::run_files::kAnswers, decap::run_files::kReportJson,
          decap::run_files::kReportCsv, decap::run_files::kTranscript}) {
      EXPECT_TRUE(fs::exists(out / mode / name)) << mode << "/" << name;
    }
  }

  const auto decap_dir = out / "decap";
  const auto before = decap::jsonl::read_text(decap_dir / decap::run_files::kReportJson);
  const auto report = cli({"report", "--run-dir", decap_dir.string(), "--sweep", "0.3,0.325,0.35,0.375,0.4", "--matrix"});
  ASSERT_EQ(report.code, decap::cli::kExitOk) << report.err;
  EXPECT_EQ(decap::jsonl::read_text(decap_dir / decap::run_files::kReportJson), before);
  const auto sweep = decap::jsonl::read_text(decap_dir / "sweep.csv");
  EXPECT_EQ(line_count(sweep), 6u);
  EXPECT_TRUE(fs::exists(decap_dir / "matrix_bias.csv"));

  const auto all = cli({"report", "--run-dir", out.string()});
  EXPECT_EQ(all.code, decap::cli::kExitOk) << all.err;
  EXPECT_EQ(line_count(all.out), 2u);
}

TEST(Cli, ConfigFileWithOverrides) {
  const auto dir = decap::testing::scratch_dir("cli-config");
  nlohmann::json config{{"dataset", fixture("minibench/minibench.jsonl").string()},
                        {"backend", "mock"},
                        {"mock_script", fixture("minibench/mock_script.json").string()},
                        {"mode", "def1"},
                        {"seeds", {0}},
                        {"model_name", "mock"}};
  std::ofstream(dir / "config.json") << config.dump();
  const auto r = cli({"run", "--config", (dir / "config.json").string(), "--out", (dir / "out").string(), "--mode", "base"});
  ASSERT_EQ(r.code, decap::cli::kExitOk) << r.err;
  const auto stored = nlohmann::json::parse(decap::jsonl::read_text(dir / "out" / decap::run_files::kConfig));
  EXPECT_EQ(stored.at("mode"), "base");
}

TEST(Cli, DetectWritesSweep) {
  const auto out = decap::testing::scratch_dir("cli-detect");
  auto args = mock_flags();
  args.insert(args.begin(), {"detect", "--out", out.string(), "--sweep", "0.3,0.35,0.4"});
  const auto r = cli(args);
  ASSERT_EQ(r.code, decap::cli::kExitOk) << r.err;
  EXPECT_TRUE(fs::exists(out / decap::run_files::kDetections));
  EXPECT_EQ(line_count(decap::jsonl::read_text(out / "sweep.csv")), 4u);
}

TEST(Cli, StagesThenRunWithReuse) {
  const auto out = decap::testing::scratch_dir("cli-stages");
  auto detect = mock_flags();
  detect.insert(detect.begin(), {"detect", "--out", (out / "detect").string()});
  ASSERT_EQ(cli(detect).code, decap::cli::kExitOk);
  auto guide = mock_flags();
  guide.insert(guide.begin(), {"guide", "--out", (out / "guide").string()});
  const auto g = cli(guide);
  ASSERT_EQ(g.code, decap::cli::kExitOk) << g.err;
  EXPECT_NE(g.out.find("guidance for 24 records, 1 failed"), std::string::npos);

  auto run = mock_flags();
  run.insert(run.begin(), {"run", "--out", (out / "run").string(), "--reuse-detections",
                           (out / "detect" / decap::run_files::kDetections).string(), "--reuse-guidance",
                           (out / "guide" / decap::run_files::kGuidance).string()});
  ASSERT_EQ(cli(run).code, decap::cli::kExitOk);
  const auto transcript = decap::jsonl::read_text(out / "run" / decap::run_files::kTranscript);
  EXPECT_EQ(transcript.find("\"stage\":\"detect"), std::string::npos);
  EXPECT_EQ(transcript.find("\"stage\":\"guid"), std::string::npos);
}
