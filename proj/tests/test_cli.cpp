#include <doctest.h>

#include <sys/wait.h>

#include <cstdio>
#include <fstream>

#include "support.hpp"
#include "synthtraj/dataset_io.hpp"
#include "synthtraj/eval.hpp"

using namespace synthtraj;
using namespace synthtraj::testing;

namespace {

struct Run {
  int code = -1;
  std::string out;
};

Run run(const std::string& args) {
  const std::string cmd = std::string(SYNTHTRAJ_CLI_PATH) + " --log-level off " + args + " 2>&1";
  Run r;
  FILE* p = ::popen(cmd.c_str(), "r");
  REQUIRE(p != nullptr);
  char buf[4096];
  while (std::size_t n = std::fread(buf, 1, sizeof buf, p)) r.out.append(buf, n);
  const int status = ::pclose(p);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string file_text(const std::filesystem::path& p) {
  std::ifstream is(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(is), {}};
}

}  // namespace

TEST_SUITE("cli") {
  TEST_CASE("end-to-end pipeline") {
    const auto dir = temp_dir("cli");
    const std::string d = dir.string();
    REQUIRE(run("demo-split --count 80 --seed 2 --out " + d + "/split").code == 0);
    const Run est = run("estimate-chain --split " + d + "/split --out " + d + "/c.tjmc");
    REQUIRE(est.code == 0);
    CHECK(est.out.find("40 clusters, order 2") != std::string::npos);

    const std::string gen = "gen-dataset --chain " + d + "/c.tjmc --count 12 --seed 4 ";
    REQUIRE(run(gen + "--jobs 1 --out " + d + "/a.tjds").code == 0);
    REQUIRE(run(gen + "--jobs 3 --out " + d + "/b.tjds").code == 0);
    CHECK(file_text(dir / "a.tjds") == file_text(dir / "b.tjds"));
    const Dataset ds = read_dataset(dir / "a.tjds");
    CHECK(ds.samples.size() == 12);

    const Run ev = run("eval --dataset " + d + "/a.tjds --baseline constant_velocity --json " + d +
                       "/r.json --write-predictions " + d + "/p.json");
    REQUIRE(ev.code == 0);
    CHECK(ev.out.find("FDE@4s") != std::string::npos);
    CHECK(read_predictions(dir / "p.json").size() == 12);
    const Run ev2 = run("eval --dataset " + d + "/a.tjds --predictions " + d + "/p.json");
    CHECK(ev2.code == 0);

    REQUIRE(run("render --dataset " + d + "/a.tjds --index 3 --predictions " + d + "/p.json --out " + d + "/img")
                .code == 0);
    CHECK(std::filesystem::file_size(dir / "img.ppm") > 360 * 360 * 3);
    CHECK(std::filesystem::exists(dir / "img.pgm"));

    REQUIRE(run("export-match-vectors --count 5 --seed 1 --out " + d + "/mv.json").code == 0);
    const auto mv = nlohmann::json::parse(file_text(dir / "mv.json"));
    CHECK(mv == match_vectors(1, 5));
  }

  TEST_CASE("ablation and sweep flags") {
    const auto dir = temp_dir("cli_flags");
    const std::string d = dir.string();
    REQUIRE(run("demo-split --count 60 --seed 3 --out " + d + "/split").code == 0);
    const Run order1 = run("estimate-chain --split " + d + "/split --state-order 1 --out " + d + "/o1.tjmc");
    CHECK(order1.code == 0);
    CHECK(order1.out.find("order 1") != std::string::npos);
    for (int c : {20, 40, 60, 80}) {
      const Run r = run("estimate-chain --split " + d + "/split --clusters " + std::to_string(c) + " --out " + d +
                        "/k" + std::to_string(c) + ".tjmc");
      CHECK(r.code == 0);
      CHECK(r.out.find(std::to_string(c) + " clusters") != std::string::npos);
    }
    const Run gen = run("gen-dataset --chain " + d + "/o1.tjmc --count 3 --no-lidar-noise --no-shift --no-unreachable "
                        "--branching-max 1 --n-gt-max 1 --out " + d + "/x.tjds");
    REQUIRE(gen.code == 0);
    for (const auto& s : read_dataset(dir / "x.tjds").samples) {
      CHECK(s.meta.shift == 0.0);
      CHECK(s.futures.size() == 1);
    }
  }

  TEST_CASE("usage and data errors have distinct exit codes") {
    const auto dir = temp_dir("cli_err");
    const std::string d = dir.string();
    CHECK(run("--help").code == 0);
    CHECK(run("no-such-command").code == 2);
    CHECK(run("gen-dataset --out " + d + "/x.tjds").code == 2);
    CHECK(run("estimate-chain --split " + d + " --out " + d + "/c.tjmc --clusters 0").code == 2);
    std::ofstream(dir / "junk.tjds") << "not an archive";
    CHECK(run("eval --dataset " + d + "/junk.tjds --baseline linear").code == 3);
    // An empty split has nothing to estimate from.
    std::filesystem::create_directories(dir / "empty");
    CHECK(run("estimate-chain --split " + d + "/empty --out " + d + "/c.tjmc").code == 3);
  }
}
