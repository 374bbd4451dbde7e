// Exercises the installed binary end to end through a shell, checking
// exit codes (0 ok, 2 validation/usage, 3 missing files) and artifacts.
#define DOCTEST_CONFIG_IMPLEMENT
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <unistd.h>

#include "doctest.h"

namespace fs = std::filesystem;

namespace {

std::string g_cli_path;

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("qerover_cli_" + std::to_string(::getpid()) + "_" +
            std::to_string(counter()++));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  static int& counter() {
    static int c = 0;
    return c;
  }
};

struct RunResult {
  int code = -1;
  std::string out;
  std::string err;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

RunResult run_cli(const std::string& args, const TempDir& dir) {
  fs::path out = dir.path / "cli_stdout.txt";
  fs::path err = dir.path / "cli_stderr.txt";
  std::string cmd = "'" + g_cli_path + "' " + args + " > '" + out.string() +
                    "' 2> '" + err.string() + "'";
  int rc = std::system(cmd.c_str());
  RunResult res;
  res.code = WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
  res.out = slurp(out);
  res.err = slurp(err);
  return res;
}

std::string simulate_corpus(const TempDir& dir, const std::string& name) {
  fs::path corpus = dir.path / name;
  auto res = run_cli(
      "simulate --segments 12 --systems 3 --vocab-size 40 "
      "--rates 0.1 0.25 0.4 --seed 5 --no-audio --out '" +
          corpus.string() + "'",
      dir);
  REQUIRE(res.code == 0);
  return (corpus / "manifest.json").string();
}

}  // namespace

TEST_CASE("help lists the subcommands and exits cleanly") {
  TempDir dir;
  auto res = run_cli("--help", dir);
  CHECK(res.code == 0);
  for (const char* sub : {"simulate", "train-lm", "extract-features",
                          "train-qe", "rank", "combine", "select-level-train",
                          "evaluate", "pipeline"}) {
    CHECK(res.out.find(sub) != std::string::npos);
  }
}

TEST_CASE("usage errors exit with code two") {
  TempDir dir;
  CHECK(run_cli("", dir).code == 2);  // a subcommand is required
  CHECK(run_cli("simulate --no-such-flag --out x", dir).code == 2);
  CHECK(run_cli("simulate --segments notanum --out x", dir).code == 2);
  CHECK(run_cli("train-qe --manifest m --features f --method bogus --out x",
                dir)
            .code == 2);
}

TEST_CASE("missing input files exit with code three") {
  TempDir dir;
  auto res = run_cli("combine --manifest '" +
                         (dir.path / "absent.json").string() +
                         "' --out '" + (dir.path / "c").string() + "'",
                     dir);
  CHECK(res.code == 3);
  CHECK(res.err.find("error:") != std::string::npos);
}

TEST_CASE("library validation failures exit with code two") {
  TempDir dir;
  auto res = run_cli("simulate --systems 1 --rates 0.1 --out '" +
                         (dir.path / "bad").string() + "'",
                     dir);
  CHECK(res.code == 2);
  CHECK(res.err.find("num_systems") != std::string::npos);
}

TEST_CASE("simulate emits a corpus and prints the manifest path") {
  TempDir dir;
  std::string manifest = simulate_corpus(dir, "corpus");
  CHECK(fs::exists(manifest));
  auto res = run_cli(
      "simulate --segments 12 --systems 3 --vocab-size 40 "
      "--rates 0.1 0.25 0.4 --seed 5 --no-audio --out '" +
          (dir.path / "corpus").string() + "'",
      dir);
  CHECK(res.out.find("manifest.json") != std::string::npos);
}

TEST_CASE("train-lm learns from the corpus references") {
  TempDir dir;
  std::string manifest = simulate_corpus(dir, "corpus");
  fs::path arpa = dir.path / "lm.arpa";
  auto res = run_cli("train-lm --manifest '" + manifest + "' --out '" +
                         arpa.string() + "'",
                     dir);
  CHECK(res.code == 0);
  REQUIRE(fs::exists(arpa));
  CHECK(slurp(arpa).find("\\data\\") != std::string::npos);

  CHECK(run_cli("train-lm --out '" + arpa.string() + "'", dir).code == 2);
}

TEST_CASE("extract, train-qe, and rank round trip on one corpus") {
  TempDir dir;
  std::string manifest = simulate_corpus(dir, "corpus");
  fs::path csv = dir.path / "features.csv";
  auto ex = run_cli("extract-features --manifest '" + manifest +
                        "' --features b --out '" + csv.string() + "'",
                    dir);
  CHECK(ex.code == 0);
  REQUIRE(fs::exists(csv));

  fs::path model = dir.path / "qe.json";
  auto tr = run_cli("train-qe --manifest '" + manifest + "' --features '" +
                        csv.string() +
                        "' --method rr1 --feature-set b --seed 5 --out '" +
                        model.string() + "'",
                    dir);
  CHECK(tr.code == 0);
  REQUIRE(fs::exists(model));

  fs::path ranks = dir.path / "ranks.csv";
  auto rk = run_cli("rank --manifest '" + manifest + "' --features '" +
                        csv.string() + "' --model '" + model.string() +
                        "' --out '" + ranks.string() + "'",
                    dir);
  CHECK(rk.code == 0);
  std::string table = slurp(ranks);
  CHECK(table.rfind("segment_id,rank,system_id,score\n", 0) == 0);
  // 12 segments x 3 systems plus the header line.
  CHECK(std::count(table.begin(), table.end(), '\n') == 37);
}

TEST_CASE("combine writes per-level outputs and a summary") {
  TempDir dir;
  std::string manifest = simulate_corpus(dir, "corpus");
  fs::path prefix = dir.path / "combined";
  auto res = run_cli("combine --manifest '" + manifest +
                         "' --ranking sego --level all --out '" +
                         prefix.string() + "'",
                     dir);
  CHECK(res.code == 0);
  for (int l = 1; l <= 3; ++l) {
    CHECK(fs::exists(prefix.string() + ".L" + std::to_string(l) + ".txt"));
    CHECK(res.out.find("level " + std::to_string(l) + ": WER") !=
          std::string::npos);
  }
  CHECK(fs::exists(prefix.string() + ".json"));

  fs::path single = dir.path / "single";
  auto one = run_cli("combine --manifest '" + manifest +
                         "' --ranking sego --level 2 --out '" +
                         single.string() + "'",
                     dir);
  CHECK(one.code == 0);
  CHECK(fs::exists(single.string() + ".txt"));
}

TEST_CASE("evaluate renders the report and saves both formats") {
  TempDir dir;
  std::string manifest = simulate_corpus(dir, "corpus");
  fs::path prefix = dir.path / "report";
  auto res = run_cli("evaluate --manifest '" + manifest +
                         "' --random-iters 3 --resamples 100 --out '" +
                         prefix.string() + "'",
                     dir);
  CHECK(res.code == 0);
  for (const char* token : {"L1", "L3", "random", "sego", "insyso"}) {
    CHECK(res.out.find(token) != std::string::npos);
  }
  CHECK(fs::exists(prefix.string() + ".txt"));
  CHECK(fs::exists(prefix.string() + ".json"));
}

int main(int argc, char** argv) {
  doctest::Context ctx;
  if (argc > 1 && argv[argc - 1][0] != '-') {
    g_cli_path = argv[argc - 1];
    ctx.applyCommandLine(argc - 1, argv);
  } else {
    ctx.applyCommandLine(argc, argv);
  }
  if (g_cli_path.empty()) {
    std::fprintf(stderr, "usage: test_cli [doctest options] <binary>\n");
    return 1;
  }
  return ctx.run();
}
