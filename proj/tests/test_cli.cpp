#include <doctest.h>

#include "burgan/common/binary_io.hpp"
#include "burgan/model/checkpoint.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <sstream>
#include <sys/wait.h>

using namespace burgan;
namespace fs = std::filesystem;

namespace {

const fs::path kWork = fs::temp_directory_path() / "burgan_test_cli";

struct Run {
  int code = -1;
  std::string out;
};

// Runs the CLI with `args`, capturing stdout (stderr is discarded).
Run cli(const std::string& args) {
  const std::string cmd = std::string(BURGAN_CLI) + " " + args + " 2>/dev/null";
  Run r;
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  char buf[4096];
  std::size_t n = 0;
  while ((n = std::fread(buf, 1, sizeof buf, pipe)) > 0) r.out.append(buf, n);
  const int status = pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::size_t count_lines(const std::string& s) { return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n')); }

// One small dataset shared by every case; generated on first use.
const fs::path& small_data() {
  static const fs::path dir = [] {
    fs::remove_all(kWork);
    fs::create_directories(kWork);
    const Run r = cli("gen-data --out " + (kWork / "data").string() + " --seed 3 --nt 8 --threads 1");
    REQUIRE(r.code == 0);
    return kWork / "data";
  }();
  return dir;
}

const fs::path& small_run() {
  static const fs::path dir = [] {
    write_file(kWork / "tiny.json",
               R"({"iterations": 10, "z_dim": 4, "validate_every": 5, "checkpoint_every": 5, "val_z": 2,
                   "train_ics": [0, 1, 2], "val_ics": [3]})");
    const Run r = cli("train --config " + (kWork / "tiny.json").string() + " --data " + small_data().string() +
                      " --out " + (kWork / "run").string());
    REQUIRE(r.code == 0);
    return kWork / "run";
  }();
  return dir;
}

}  // namespace

TEST_CASE("gen-data reports the split sizes and is deterministic") {
  const fs::path& data = small_data();
  CHECK(fs::exists(data / "manifest.json"));
  const Run again = cli("gen-data --out " + (kWork / "data2").string() + " --seed 3 --nt 8 --threads 1");
  CHECK(again.code == 0);
  CHECK(again.out.find("train=85 val=15 test=20") != std::string::npos);
  CHECK(read_file(data / "manifest.json") == read_file(kWork / "data2" / "manifest.json"));
  CHECK(read_file(data / "field_057.brg") == read_file(kWork / "data2" / "field_057.brg"));

  const Run inspect = cli("inspect --data " + data.string());
  CHECK(inspect.code == 0);
  CHECK(inspect.out.find("nt 8") != std::string::npos);
  CHECK(cli("gen-data --out " + (kWork / "bad").string() + " --nt 3").code == 2);
}

TEST_CASE("train writes one metrics row per iteration") {
  const fs::path& run = small_run();
  CHECK(count_lines(read_file(run / "metrics.csv")) == 11);
  CHECK(count_lines(read_file(run / "validation.csv")) == 4);
  CHECK(fs::exists(run / "checkpoint.brg"));
  CHECK(fs::exists(run / "config.json"));

  const Run inspect = cli("inspect --checkpoint " + (run / "checkpoint.brg").string());
  CHECK(inspect.code == 0);
  CHECK(inspect.out.find("z_dim 4") != std::string::npos);
  CHECK(inspect.out.find("iteration 10") != std::string::npos);
}

TEST_CASE("train rejects bad configs with exit code 2") {
  write_file(kWork / "typo.json", R"({"iteratons": 10})");
  CHECK(cli("train --config " + (kWork / "typo.json").string() + " --data " + small_data().string() + " --out " +
            (kWork / "typo_run").string())
            .code == 2);
  CHECK(cli("train --data " + small_data().string()).code == 2);
  CHECK(cli("no-such-command").code == 2);
}

TEST_CASE("sample") {
  const std::string ckpt = (small_run() / "checkpoint.brg").string();
  const Run a = cli("sample --checkpoint " + ckpt + " --ic 1,0.5,0,0.7 --z-seed 4 --nt 6");
  REQUIRE(a.code == 0);
  CHECK(count_lines(a.out) == 6);
  std::istringstream first(a.out.substr(0, a.out.find('\n')));
  std::size_t cols = 0;
  for (std::string cell; std::getline(first, cell, ',');) ++cols;
  CHECK(cols == 512);
  CHECK(cli("sample --checkpoint " + ckpt + " --ic 1,0.5,0,0.7 --z-seed 4 --nt 6").out == a.out);
  CHECK(cli("sample --checkpoint " + ckpt + " --ic 1,0.5,0,0.7 --z-seed 5 --nt 6").out != a.out);

  // an IC outside the training family still gives finite values
  const Run unseen = cli("sample --checkpoint " + ckpt + " --ic 0.37,0.77,0.25,-0.3 --nt 5");
  REQUIRE(unseen.code == 0);
  std::istringstream cells(unseen.out);
  bool finite = true;
  for (std::string line; std::getline(cells, line);) {
    std::istringstream row(line);
    for (std::string cell; std::getline(row, cell, ',');) finite = finite && std::isfinite(std::stod(cell));
  }
  CHECK(finite);

  const fs::path file = kWork / "sample.csv";
  CHECK(cli("sample --checkpoint " + ckpt + " --ic 1,0.5,0,0.7 --z-seed 4 --nt 6 --out " + file.string()).code == 0);
  CHECK(read_file(file) == a.out);
  CHECK(cli("sample --checkpoint " + ckpt + " --ic 1,2,3").code == 2);
  CHECK(cli("sample --checkpoint " + (kWork / "missing.brg").string() + " --ic 1,0.5,0,0.7").code == 1);
}

TEST_CASE("eval") {
  const std::string data = small_data().string();
  const Run base = cli("eval --baseline persistence --data " + data + " --out " + (kWork / "persist").string() +
                       " --K 2 --no-plots");
  CHECK(base.code == 0);
  CHECK(count_lines(read_file(kWork / "persist" / "report.csv")) == 21);
  CHECK(!fs::exists(kWork / "persist" / "plots"));

  const std::string ckpt = (small_run() / "checkpoint.brg").string();
  const Run model = cli("eval --checkpoint " + ckpt + " --data " + data + " --out " + (kWork / "eval").string() +
                        " --K 3 --threads 1");
  CHECK(model.code == 0);
  CHECK(model.out.find("mean test rel. l2") != std::string::npos);
  CHECK(fs::exists(kWork / "eval" / "plots" / "ic_000.csv"));
  const std::string first = read_file(kWork / "eval" / "report.json");
  CHECK(cli("eval --checkpoint " + ckpt + " --data " + data + " --out " + (kWork / "eval2").string() +
            " --K 3 --threads 2 --no-plots")
            .code == 0);
  CHECK(read_file(kWork / "eval2" / "report.json") == first);

  // a checkpoint whose layer layout does not match the architecture
  std::string raw = read_file(ckpt);
  raw[24] = 7;
  write_file(kWork / "mismatch.brg", raw);
  CHECK(cli("eval --checkpoint " + (kWork / "mismatch.brg").string() + " --data " + data + " --out " +
            (kWork / "eval3").string())
            .code == 2);
  CHECK(cli("eval --data " + data + " --out " + (kWork / "eval4").string()).code == 2);
  CHECK(cli("eval --baseline climatology --data " + data + " --out " + (kWork / "eval5").string()).code == 2);
}
