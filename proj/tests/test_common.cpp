#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <stdexcept>
#include <vector>

#include "doctest.h"
#include "qerover/common.hpp"
#include "qerover/config.hpp"

using namespace qerover;

TEST_CASE("splitmix64 matches the published test vector") {
  std::uint64_t state = 0;
  CHECK(splitmix64(state) == 0xE220A8397B1DCDAFULL);
  CHECK(splitmix64(state) == 0x6E789E6AA1B965F4ULL);
  CHECK(splitmix64(state) == 0x06C45D188009454FULL);
}

TEST_CASE("rng streams are deterministic under seed") {
  Rng a(42), b(42), c(43);
  bool all_equal = true, any_differs = false;
  for (int i = 0; i < 100; ++i) {
    std::uint64_t va = a.next_u64();
    if (va != b.next_u64()) all_equal = false;
    if (va != c.next_u64()) any_differs = true;
  }
  CHECK(all_equal);
  CHECK(any_differs);
}

TEST_CASE("derived streams decorrelate by index") {
  CHECK(Rng::derive(1, 0) != Rng::derive(1, 1));
  CHECK(Rng::derive(1, 0) != Rng::derive(2, 0));
  // same inputs, same stream
  CHECK(Rng::derive(7, 3) == Rng::derive(7, 3));
}

TEST_CASE("next_below stays in range and covers it") {
  Rng rng(5);
  std::set<std::uint64_t> seen;
  for (int i = 0; i < 10000; ++i) {
    std::uint64_t v = rng.next_below(7);
    CHECK(v < 7);
    seen.insert(v);
  }
  CHECK(seen.size() == 7);
}

TEST_CASE("next_int covers an inclusive range") {
  Rng rng(6);
  std::set<int> seen;
  for (int i = 0; i < 1000; ++i) {
    int v = rng.next_int(-2, 2);
    CHECK(v >= -2);
    CHECK(v <= 2);
    seen.insert(v);
  }
  CHECK(seen.size() == 5);
}

TEST_CASE("next_double and next_uniform stay in range") {
  Rng rng(7);
  for (int i = 0; i < 1000; ++i) {
    double d = rng.next_double();
    CHECK(d >= 0.0);
    CHECK(d < 1.0);
    double u = rng.next_uniform(-1.5, 2.5);
    CHECK(u >= -1.5);
    CHECK(u < 2.5);
  }
}

TEST_CASE("shuffle permutes without losing elements") {
  Rng rng(8);
  std::vector<int> v{1, 2, 3, 4, 5, 6, 7, 8};
  std::vector<int> orig = v;
  rng.shuffle(v);
  std::vector<int> sorted = v;
  std::sort(sorted.begin(), sorted.end());
  CHECK(sorted == orig);
}

TEST_CASE("parallel_for matches the serial reference") {
  std::vector<std::int64_t> serial(1000), parallel(1000);
  parallel_for(1000, 1, [&](std::int64_t i) { serial[std::size_t(i)] = i * i; });
  parallel_for(1000, 4,
               [&](std::int64_t i) { parallel[std::size_t(i)] = i * i; });
  CHECK(serial == parallel);
}

TEST_CASE("parallel_for propagates body exceptions") {
  auto boom = [](std::int64_t i) {
    if (i == 37) throw std::runtime_error("boom");
  };
  CHECK_THROWS_AS(parallel_for(100, 1, boom), std::runtime_error);
  CHECK_THROWS_AS(parallel_for(100, 4, boom), std::runtime_error);
}

TEST_CASE("hardware_jobs is at least one") { CHECK(hardware_jobs() >= 1); }

TEST_CASE("format_double round-trips exactly") {
  for (double v : {0.0, -0.0, 0.1, 1.0 / 3.0, 1e-300, 1e300, -2.5,
                   123456.789, 5e-324}) {
    std::string s = format_double(v);
    double back = std::strtod(s.c_str(), nullptr);
    CHECK(back == v);
  }
}

TEST_CASE("config parses sections, comments, and typed values") {
  namespace fs = std::filesystem;
  fs::path path = fs::temp_directory_path() / "qerover_config_test.toml";
  {
    std::ofstream out(path);
    out << "# comment\n"
        << "alpha = 0.95\n"
        << "name = rover\n"
        << "[vote]\n"
        << "null_weight = 0.5\n"
        << "flags = a, b, c\n"
        << "enabled = true\n";
  }
  Config cfg = Config::load(path.string());
  CHECK(cfg.get_double("alpha", 0.0) == 0.95);
  CHECK(cfg.get_string("name", "") == "rover");
  CHECK(cfg.get_double("vote.null_weight", 1.0) == 0.5);
  CHECK(cfg.get_bool("vote.enabled", false));
  CHECK(cfg.get_list("vote.flags", {}) ==
        std::vector<std::string>{"a", "b", "c"});
  CHECK(cfg.get_int("missing", 17) == 17);
  fs::remove(path);
}

TEST_CASE("parse error carries file and line") {
  ParseError err("data.ctm", 12, "short line");
  std::string what = err.what();
  CHECK(what.find("data.ctm") != std::string::npos);
  CHECK(what.find("12") != std::string::npos);
}
