#include <doctest.h>

#include <sys/wait.h>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace fs = std::filesystem;

namespace {

struct Run {
  int code = -1;
  std::string out;
};

Run run(const std::string& args) {
  const std::string cmd = std::string(QINTENT_BIN) + " " + args + " 2>/dev/null";
  Run r;
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe);
  char buf[4096];
  while (const std::size_t n = fread(buf, 1, sizeof buf, pipe)) {
    r.out.append(buf, n);
  }
  const int status = pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

struct Workspace {
  fs::path dir;
  Workspace() {
    dir = fs::temp_directory_path() / ("qintent_cli_" + std::to_string(::getpid()));
    fs::remove_all(dir);
    fs::create_directories(dir);
  }
  ~Workspace() { fs::remove_all(dir); }
  std::string at(const std::string& name) const { return (dir / name).string(); }
  void write(const std::string& name, const std::string& text) const { std::ofstream(dir / name) << text; }
};

}  // namespace

TEST_CASE("exit codes") {
  Workspace ws;
  CHECK(run("").code == 2);
  CHECK(run("weigh --query x").code == 2);
  CHECK(run("frobnicate").code == 2);
  ws.write("bad.json", R"({"foo": 1})");
  CHECK(run("weigh --model " + ws.at("bad.json") + " --query x").code == 3);
  ws.write("old.json", R"({"model_type": "ctw", "format_version": 99})");
  CHECK(run("weigh --model " + ws.at("old.json") + " --query x").code == 4);
  CHECK(run("weigh --model " + ws.at("missing.json") + " --query x").code == 1);
}

TEST_CASE("pipeline") {
  Workspace ws;
  REQUIRE(run("synth --out-dir " + ws.at("d") + " --sessions 20000 --seed 3").code == 0);
  REQUIRE(run("extract --sessions " + ws.at("d/sessions.jsonl") + " --stats " + ws.at("d/query_stats.jsonl") +
              " --out " + ws.at("pairs.jsonl"))
              .code == 0);
  REQUIRE(run("split --pairs " + ws.at("pairs.jsonl") + " --out-dir " + ws.at("s") + " --seed 3").code == 0);
  const std::string data = " --train " + ws.at("s/train.jsonl") + " --validation " + ws.at("s/validation.jsonl");

  SUBCASE("training twice with one seed gives identical files") {
    const std::string common = "train ctw" + data + " --preset desk --epochs 2 --seed 7 --quiet --out ";
    REQUIRE(run(common + ws.at("m1.json")).code == 0);
    REQUIRE(run(common + ws.at("m2.json")).code == 0);
    CHECK(slurp(ws.dir / "m1.json") == slurp(ws.dir / "m2.json"));

    const auto w = run("weigh --model " + ws.at("m1.json") + " --query \"promo code for motorola phone\" --normalize");
    REQUIRE(w.code == 0);
    std::istringstream lines(w.out);
    std::string term;
    double weight = 0.0;
    std::vector<double> weights;
    while (lines >> term >> weight) {
      weights.push_back(weight);
    }
    REQUIRE(weights.size() == 5);
    CHECK(*std::max_element(weights.begin(), weights.end()) == 1.0);
  }

  SUBCASE("evaluation prints the metric columns") {
    REQUIRE(run("fit ftw --train " + ws.at("s/train.jsonl") + " --out " + ws.at("ftw.json")).code == 0);
    REQUIRE(run("fit tfidf --train " + ws.at("s/train.jsonl") + " --out " + ws.at("tfidf.json")).code == 0);
    const auto e = run("eval weighting --model " + ws.at("ftw.json") + " --model " + ws.at("tfidf.json") +
                       " --pairs " + ws.at("s/test.jsonl") + " --oracle --json " + ws.at("report.json"));
    REQUIRE(e.code == 0);
    for (const char* col : {"AP@1", "AP@2", "AP@3", "AP@nnz", "ftw", "tfidf", "oracle"}) {
      CHECK(e.out.find(col) != std::string::npos);
    }
    CHECK(fs::exists(ws.dir / "report.json"));
    // tfidf against itself is not significant.
    CHECK(run("eval weighting --model " + ws.at("tfidf.json") + " --model " + ws.at("tfidf.json") + " --pairs " +
              ws.at("s/test.jsonl") + " --significance 0.05")
              .code == 5);
  }

  SUBCASE("manifest records digests") {
    REQUIRE(run("--manifest " + ws.at("m.jsonl") + " fit fqr --train " + ws.at("s/train.jsonl") + " --out " +
                ws.at("fqr.json"))
                .code == 0);
    const auto text = slurp(ws.dir / "m.jsonl");
    CHECK(text.find("sha256") != std::string::npos);
    CHECK(text.find("\"exit_code\":0") != std::string::npos);
    const auto r = run("refine --model " + ws.at("fqr.json") + " --query \"motorola phone\" --k 3");
    CHECK(r.code == 0);
    CHECK(std::count(r.out.begin(), r.out.end(), '\n') == 3);
  }
}
