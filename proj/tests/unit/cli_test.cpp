// End-to-end runs of the CLI binary.
#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

const std::string kCli = WIKIMRC_CLI;
const std::string kData = WIKIMRC_DATA_DIR;

struct Result {
  int code = -1;
  std::string out;
};

Result run(const std::string& args) {
  Result r;
  std::string cmd = kCli + " " + args + " 2>/dev/null";
  FILE* p = popen(cmd.c_str(), "r");
  if (!p) return r;
  char buf[4096];
  std::size_t n;
  while ((n = fread(buf, 1, sizeof buf, p)) > 0) r.out.append(buf, n);
  int st = pclose(p);
  r.code = WIFEXITED(st) ? WEXITSTATUS(st) : -1;
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::ostringstream s;
  s << f.rdbuf();
  return s.str();
}

std::vector<json> jsonl(const fs::path& p) {
  std::vector<json> out;
  std::ifstream f(p);
  std::string line;
  while (std::getline(f, line))
    if (!line.empty()) out.push_back(json::parse(line));
  return out;
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir = fs::temp_directory_path() /
          ("wikimrc_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()) + "_" +
           std::to_string(::getpid()));
    fs::remove_all(dir);
    fs::create_directories(dir);
  }
  void TearDown() override { fs::remove_all(dir); }
  void write(const std::string& name, const std::string& body) { std::ofstream(dir / name) << body; }
  std::string p(const std::string& name) const { return (dir / name).string(); }
  fs::path dir;
};

}  // namespace

TEST_F(Cli, UsageErrorsExitOne) {
  EXPECT_EQ(run("").code, 1);
  EXPECT_EQ(run("no-such-command").code, 1);
  EXPECT_EQ(run("build-corpus --dump " + p("missing.xml") + " --out " + p("o")).code, 1);
  write("bad.json", "{\"windw\": 1}");
  EXPECT_EQ(run("build-corpus --config " + p("bad.json") + " --dump " + kData + "/mini_dump.xml --out " + p("o")).code, 1);
  EXPECT_EQ(run("build-corpus --dump " + kData + "/mini_dump.xml --out " + p("o") + " --strategy rel-top-p").code, 1);
}

TEST_F(Cli, BuildCorpusMatchesGolden) {
  auto r = run("build-corpus --dump " + kData + "/mini_dump.xml --out " + p("c") + " --w 1 --inlink-min 2 --seed 0");
  ASSERT_EQ(r.code, 0);
  EXPECT_EQ(slurp(dir / "c" / "corpus.jsonl"), slurp(kData + "/golden/corpus.jsonl"));
  EXPECT_EQ(slurp(dir / "c" / "report.json"), slurp(kData + "/golden/report.json"));
}

TEST_F(Cli, ConfigFileAndFlagOverride) {
  write("cfg.json", R"({"window": 1, "inlink_min": 2, "seed": 0, "n_ans": 1})");
  auto r = run("build-corpus --config " + p("cfg.json") + " --n-ans 10 --dump " + kData + "/mini_dump.xml --out " +
               p("c") + " --dump-config " + p("eff.json"));
  ASSERT_EQ(r.code, 0);
  EXPECT_EQ(slurp(dir / "c" / "corpus.jsonl"), slurp(kData + "/golden/corpus.jsonl"));
  auto eff = json::parse(slurp(dir / "eff.json"));
  EXPECT_EQ(eff["n_ans"], 10);
  EXPECT_EQ(eff["window"], 1);
}

TEST_F(Cli, IngestIndexStatsSplit) {
  ASSERT_EQ(run("ingest --dump " + kData + "/mini_dump.xml --out " + p("a.jsonl")).code, 0);
  auto arts = jsonl(dir / "a.jsonl");
  EXPECT_EQ(arts.size(), 6u);
  ASSERT_EQ(run("index --in " + p("a.jsonl") + " --out " + p("idx.json")).code, 0);
  auto idx = json::parse(slurp(dir / "idx.json"));
  EXPECT_FALSE(idx.empty());
  // building from ingested JSONL equals building from the XML
  ASSERT_EQ(run("build-corpus --in " + p("a.jsonl") + " --out " + p("c") + " --w 1 --inlink-min 2").code, 0);
  EXPECT_EQ(slurp(dir / "c" / "corpus.jsonl"), slurp(kData + "/golden/corpus.jsonl"));
  auto st = run("stats --in " + p("c/corpus.jsonl"));
  ASSERT_EQ(st.code, 0);
  EXPECT_EQ(json::parse(st.out)["examples"], 16);
  ASSERT_EQ(run("split-dev --in " + p("c/corpus.jsonl") + " --out " + p("s") + " --dev-entities 1").code, 0);
  EXPECT_EQ(jsonl(dir / "s" / "train.jsonl").size() + jsonl(dir / "s" / "dev.jsonl").size(), 16u);
  EXPECT_EQ(run("split-dev --in " + p("c/corpus.jsonl") + " --out " + p("s2")).code, 1);  // 1000 > 3
}

TEST_F(Cli, ConvertTasks) {
  ASSERT_EQ(run("convert-task --kind ner --in " + kData + "/conll_mini.txt --out " + p("ner.jsonl")).code, 0);
  auto ner = jsonl(dir / "ner.jsonl");
  ASSERT_EQ(ner.size(), 2u);
  EXPECT_EQ(ner[0]["branches"].size(), 4u);
  EXPECT_EQ(ner[0]["branches"][2]["answers"].size(), 2u);
  ASSERT_EQ(run("convert-task --kind eqa --in " + kData + "/squad_mini.json --out " + p("eqa.jsonl")).code, 0);
  EXPECT_EQ(jsonl(dir / "eqa.jsonl")[0]["branches"][0]["answers"][0]["text"], "Carolina Panthers");
  ASSERT_EQ(run("convert-task --kind mcqa --in " + kData + "/obqa_mini.jsonl --out " + p("mc.jsonl")).code, 0);
  EXPECT_EQ(jsonl(dir / "mc.jsonl")[0]["branches"][2]["gold"], true);
  ASSERT_EQ(run("convert-task --kind sentcls --templates " + kData + "/sst2_templates.json --in " + kData +
                "/sst2_mini.jsonl --out " + p("sst.jsonl"))
                .code,
            0);
  EXPECT_EQ(jsonl(dir / "sst.jsonl")[0]["branches"][1]["gold"], true);
  ASSERT_EQ(run("convert-task --kind paircls --in " + kData + "/mnli_mini.jsonl --out " + p("nli.jsonl")).code, 0);
  EXPECT_EQ(jsonl(dir / "nli.jsonl")[0]["branches"].size(), 3u);
  EXPECT_EQ(run("convert-task --kind eqa --templates " + kData + "/sst2_templates.json --in " + kData +
                "/squad_mini.json --out " + p("x.jsonl"))
                .code,
            1);
}

TEST_F(Cli, EvalKinds) {
  write("eqa.jsonl", "{\"id\":\"56be4db0acb8001400a502ec\",\"prediction\":\"the Carolina Panthers\"}\n"
                     "{\"id\":\"sb50-who-won\",\"prediction\":\"Broncos\"}\n");
  auto r = run("eval --kind eqa --gold " + kData + "/squad_mini.json --pred " + p("eqa.jsonl"));
  ASSERT_EQ(r.code, 0);
  auto j = json::parse(r.out);
  EXPECT_DOUBLE_EQ(j["metrics"]["em"].get<double>(), 0.5);
  EXPECT_NEAR(j["metrics"]["f1"].get<double>(), (1.0 + 2.0 / 3.0) / 2.0, 1e-12);

  write("ner.jsonl", "{\"id\":\"conll-0\",\"entities\":[{\"start\":9,\"end\":9,\"label\":\"LOC\"},"
                     "{\"start\":17,\"end\":17,\"label\":\"PER\"}]}\n");
  r = run("eval --kind ner --gold " + kData + "/conll_mini.txt --pred " + p("ner.jsonl"));
  ASSERT_EQ(r.code, 0);
  j = json::parse(r.out);
  EXPECT_DOUBLE_EQ(j["metrics"]["precision"].get<double>(), 0.5);
  EXPECT_DOUBLE_EQ(j["metrics"]["recall"].get<double>(), 0.2);

  write("sst.jsonl", "{\"id\":\"sst-0\",\"label\":\"positive\"}\n{\"id\":\"sst-1\",\"label\":1}\n");
  r = run("eval --kind sentcls --gold " + kData + "/sst2_mini.jsonl --pred " + p("sst.jsonl"));
  ASSERT_EQ(r.code, 0);
  EXPECT_DOUBLE_EQ(json::parse(r.out)["metrics"]["accuracy"].get<double>(), 0.5);

  write("mc.jsonl", "{\"id\":\"7-980\",\"answer\":2}\n");
  r = run("eval --kind mcqa --gold " + kData + "/obqa_mini.jsonl --pred " + p("mc.jsonl"));
  ASSERT_EQ(r.code, 0);
  EXPECT_DOUBLE_EQ(json::parse(r.out)["metrics"]["accuracy"].get<double>(), 1.0);

  write("stray.jsonl", "{\"id\":\"nope\",\"label\":\"Positive\"}\n");
  EXPECT_EQ(run("eval --kind sentcls --gold " + kData + "/sst2_mini.jsonl --pred " + p("stray.jsonl")).code, 1);
}

TEST_F(Cli, EvalRationale) {
  write("r.jsonl", "{\"id\":\"a\",\"tokens\":[\"good\",\"film\"],\"start\":0,\"end\":0,\"label\":\"Positive\"}\n"
                   "{\"id\":\"b\",\"tokens\":[\"dull\"],\"start\":0,\"end\":0,\"label\":\"Negative\"}\n");
  auto r = run("eval --kind rationale --pred " + p("r.jsonl") + " --review-sheet " + p("sheet.jsonl"));
  ASSERT_EQ(r.code, 0);
  EXPECT_EQ(jsonl(dir / "sheet.jsonl").size(), 2u);
  EXPECT_FALSE(json::parse(r.out)["metrics"].contains("reasonable_fraction"));
  write("ann.jsonl", "{\"id\":\"a\",\"reasonable\":true}\n{\"id\":\"b\",\"reasonable\":true}\n");
  r = run("eval --kind rationale --pred " + p("r.jsonl") + " --gold " + p("ann.jsonl"));
  ASSERT_EQ(r.code, 0);
  EXPECT_DOUBLE_EQ(json::parse(r.out)["metrics"]["reasonable_fraction"].get<double>(), 1.0);
}

TEST_F(Cli, SelftestAndDemo) {
  auto r = run("selftest --gradient-cases 5 --mask-cases 20 --decode-cases 20");
  ASSERT_EQ(r.code, 0);
  EXPECT_TRUE(json::parse(r.out)["pass"].get<bool>());
  r = run("demo-train --examples 6 --unanswerable 2 --steps 50 --out " + p("log.jsonl") + " --report " + p("s.jsonl"));
  ASSERT_EQ(r.code, 0);
  EXPECT_EQ(jsonl(dir / "s.jsonl").size(), 6u);
  EXPECT_FALSE(jsonl(dir / "log.jsonl").empty());
  EXPECT_EQ(run("demo-train --examples 6 --unanswerable 2 --steps 50 --lr 1e6").code, 2);
  EXPECT_EQ(run("demo-train --examples 2 --unanswerable 3").code, 1);
}
