// Drives the kinship executable end to end on a small world.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sys/wait.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace fs = std::filesystem;

namespace {

struct Result {
  int code = -1;
  std::string output;
};

Result run(const std::string& args) {
  const std::string cmd = std::string(KINSHIP_CLI) + " " + args + " 2>&1";
  Result r;
  FILE* p = popen(cmd.c_str(), "r");
  REQUIRE(p != nullptr);
  std::array<char, 4096> buf{};
  std::size_t n = 0;
  while ((n = std::fread(buf.data(), 1, buf.size(), p)) > 0) r.output.append(buf.data(), n);
  const int status = pclose(p);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("kinship_cli_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

const std::string kSmall = "--seed 7 --dim 16 --families-train 10 --families-val 3 --families-test 3";

}  // namespace

TEST_CASE("synth is byte-identical across runs with the same seed") {
  const auto a = scratch("synth_a");
  const auto b = scratch("synth_b");
  REQUIRE(run("synth " + kSmall + " --out " + a.string()).code == 0);
  REQUIRE(run("synth " + kSmall + " --out " + b.string()).code == 0);
  int compared = 0;
  for (const auto& e : fs::directory_iterator(a)) {
    const auto name = e.path().filename();
    if (name == "manifest.json") continue;
    REQUIRE(fs::exists(b / name));
    CHECK_MESSAGE(slurp(e.path()) == slurp(b / name), name.string());
    ++compared;
  }
  CHECK(compared >= 4);
  CHECK(fs::exists(a / "manifest.json"));
}

TEST_CASE("usage and config errors exit with 2") {
  CHECK(run("synth --no-such-flag").code == 2);
  CHECK(run("nonsense").code == 2);

  const auto dir = scratch("badcfg");
  std::ofstream(dir / "cfg.json") << R"({"model": {"hiden": 12}})";
  const auto r = run("synth --config " + (dir / "cfg.json").string() + " --out " + dir.string());
  CHECK(r.code == 2);
  CHECK(r.output.find("model.hiden") != std::string::npos);

  CHECK(run("eval --out " + dir.string()).code == 2);
  CHECK(run("verify --id1 a --id2 b").code == 2);
}

TEST_CASE("gradcheck exits cleanly") {
  const auto r = run("gradcheck --out " + scratch("gradcheck").string());
  CHECK(r.code == 0);
}

TEST_CASE("train, calibrate and verify a pair") {
  const auto dir = scratch("pipeline");
  const std::string d = dir.string();
  REQUIRE(run("synth " + kSmall + " --out " + d).code == 0);
  const auto tr = run("train --seed 7 --data " + d + " --out " + d +
                      " --hidden 16 --epochs 1 --batch-size 32 --attention-epochs 1");
  REQUIRE_MESSAGE(tr.code == 0, tr.output);
  CHECK(fs::exists(dir / "model.kinc"));
  CHECK(fs::exists(dir / "history.csv"));

  const auto ev = run("eval --seed 7 --data " + d + " --model " + (dir / "model.kinc").string() + " --out " + d +
                      " --calibrate");
  REQUIRE_MESSAGE(ev.code == 0, ev.output);
  CHECK(fs::exists(dir / "report.csv"));

  std::ifstream pairs(dir / "pairs_test.csv");
  std::string header, row;
  std::getline(pairs, header);
  std::getline(pairs, row);
  std::string id1, id2, rel;
  std::istringstream cells(row);
  std::getline(cells, id1, ',');
  std::getline(cells, id2, ',');
  std::getline(cells, rel, ',');
  const auto v = run("verify --data " + d + " --model " + (dir / "model.kinc").string() + " --id1 " + id1 +
                     " --id2 " + id2 + " --relation " + rel + " --out " + d);
  CHECK_MESSAGE(v.code == 0, v.output);
  CHECK(v.output.find("decision ") != std::string::npos);

  const auto bad = run("verify --data " + d + " --model " + (dir / "model.kinc").string() +
                       " --id1 " + id1 + " --id2 " + id2 + " --relation XX --out " + d);
  CHECK(bad.code != 0);

  const auto pr = run("predict-relation --seed 7 --data " + d + " --model " + (dir / "model.kinc").string() +
                      " --out " + d);
  CHECK_MESSAGE(pr.code == 0, pr.output);
  CHECK(fs::exists(dir / "relation_report.csv"));
}
