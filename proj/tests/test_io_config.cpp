#include <catch2/catch_amalgamated.hpp>

#include <filesystem>

#include "nachain/config.hpp"
#include "nachain/io.hpp"

using namespace nachain;
namespace fs = std::filesystem;

namespace {
fs::path scratch_dir(const std::string& name) {
  const auto d = fs::temp_directory_path() / ("nachain_test_" + name);
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}
}  // namespace

TEST_CASE("csv quoting and line endings") {
  CHECK(csv_quote("plain") == "plain");
  CHECK(csv_quote("a,b") == "\"a,b\"");
  CHECK(csv_quote("say \"hi\"") == "\"say \"\"hi\"\"\"");
  const auto d = scratch_dir("csv");
  {
    CsvWriter w(d / "t.csv", {"x", "name"});
    w.row(0.5, "a,b");
    w.row(std::size_t{3}, "c");
    CHECK_THROWS(w.row(1.0));
  }
  CHECK(read_file(d / "t.csv") == "x,name\r\n0.5,\"a,b\"\r\n3,c\r\n");
  CHECK(fmt_double(0.1) == "0.10000000000000001");
  CHECK(std::stod(fmt_double(1.0 / 3.0)) == 1.0 / 3.0);
}

TEST_CASE("binary dump round trip") {
  const auto d = scratch_dir("dump");
  ChainState s(12, {1.0, 1.0});
  for (std::size_t x = 0; x < 12; ++x) {
    s.curvature[x] = std::sin(1.0 + x) * 1e-300;
    s.momentum[x] = -1.0 / (x + 0.3);
  }
  write_dump(d / "s.bin", s);
  CHECK(fs::file_size(d / "s.bin") == 8 + 8 + 12 * 16);
  const auto r = read_dump(d / "s.bin", {1.0, 1.0});
  CHECK(r.curvature == s.curvature);
  CHECK(r.momentum == s.momentum);
  {
    std::ofstream o(d / "bad.bin", std::ios::binary);
    o << "NOTADUMP and more";
  }
  CHECK_THROWS_WITH(read_dump(d / "bad.bin", {1.0, 1.0}), Catch::Matchers::ContainsSubstring("NACHAIN1"));
  const auto full = read_file(d / "s.bin");
  {
    std::ofstream o(d / "short.bin", std::ios::binary);
    o << full.substr(0, 40);
  }
  CHECK_THROWS(read_dump(d / "short.bin", {1.0, 1.0}));
}

TEST_CASE("git blob hash") {
  CHECK(git_blob_sha1("hello\n") == "ce013625030ba8dba906f756967f9e9ca394464a");
  CHECK(git_blob_sha1("") == "e69de29bb2d1d6434b8b29ae775ad8c2e48c5391");
}

TEST_CASE("config table syntax") {
  const auto t = ConfigTable::parse(
      "# comment\n"
      "top = 1\n"
      "[a]\n"
      "n = 1_000  # trailing\n"
      "s = \"x # not a comment\"\n"
      "v = [1, 2.5, -3e-2]\n"
      "b = true\n");
  CHECK(t.number("top", 0) == 1.0);
  CHECK(t.integer("a.n", 0) == 1000);
  CHECK(t.string("a.s", "") == "x # not a comment");
  CHECK(t.numbers("a.v", {}) == std::vector<double>{1, 2.5, -3e-2});
  CHECK(t.boolean("a.b", false));
  CHECK(t.number("a.missing", 7) == 7);
  CHECK_THROWS_AS(t.string("a.n", ""), ConfigError);
  CHECK_THROWS_AS(t.number("a.v", 0), ConfigError);
  CHECK_THROWS_AS(ConfigTable::parse("[a\n"), ConfigError);
  CHECK_THROWS_AS(ConfigTable::parse("x = 1\nx = 2\n"), ConfigError);
  CHECK_THROWS_AS(ConfigTable::parse("x = 1.2.3\n"), ConfigError);
  CHECK_THROWS_AS(ConfigTable::parse("x = [1, 2\n"), ConfigError);
  CHECK_THROWS_AS(ConfigTable::parse("novalue\n"), ConfigError);
}

TEST_CASE("run config loading and validation") {
  const auto c = load_config(
      "[model]\nalpha = 2.0\ngamma = 0.5\n"
      "[lattice]\nN = 128\nt_macro = [0.0, 0.1]\n"
      "[init]\nkind = \"local_gibbs\"\np_modes = [1]\np_cos = [0.2]\n"
      "[experiment]\nkind = \"compare\"\n"
      "[compare]\nN = [64, 128]\n");
  CHECK(c.model.alpha == 2.0);
  CHECK(c.N == 128);
  CHECK(c.t_macro.size() == 2);
  CHECK(c.experiment == Experiment::compare);
  CHECK(c.profiles.p.modes.size() == 1);
  CHECK(c.profiles.beta_inv.mean == 1.0);
  CHECK(c.compare_N.size() == 2);
  CHECK_THROWS_WITH(load_config("[model]\nbeta = 1\n"), Catch::Matchers::ContainsSubstring("unknown config key"));
  CHECK_THROWS_AS(load_config("[lattice]\nN = 4\n"), ConfigError);
  CHECK_THROWS_AS(load_config("[lattice]\nN = 64.5\n"), ConfigError);
  CHECK_THROWS_AS(load_config("[model]\ngamma = -1\n"), ConfigError);
  CHECK_THROWS_AS(load_config("[init]\nkind = \"uniform\"\n"), ConfigError);
  CHECK_THROWS_AS(load_config("[experiment]\nkind = \"bogus\"\n"), ConfigError);
  CHECK_THROWS_AS(load_config("[ensemble]\nreplicas = 0\n"), ConfigError);
  CHECK_THROWS_AS(load_config("[output]\nformats = [\"xml\"]\n"), ConfigError);
}
