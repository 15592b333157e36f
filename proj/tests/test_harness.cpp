#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "nachain/harness.hpp"

using namespace nachain;
namespace fs = std::filesystem;

namespace {
fs::path scratch_dir(const std::string& name) {
  const auto d = fs::temp_directory_path() / ("nachain_harness_" + name);
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

fs::path write_config(const fs::path& dir, const std::string& text) {
  const auto p = dir / "run.toml";
  std::ofstream(p, std::ios::binary) << text;
  return p;
}

int cli(const std::string& args) {
  const std::string cmd = std::string(NACHAIN_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int st = std::system(cmd.c_str());
  return WIFEXITED(st) ? WEXITSTATUS(st) : -1;
}

std::string first_line(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::string l;
  std::getline(in, l);
  if (!l.empty() && l.back() == '\r') l.pop_back();
  return l;
}

const char* kSimulate =
    "[lattice]\nN = 32\nt_macro = [0.0, 0.001]\n"
    "[ensemble]\nreplicas = 2\nseed = 7\n";
}  // namespace

TEST_CASE("simulate writes trajectory, spectrum and manifest") {
  const auto d = scratch_dir("sim");
  const auto rr = run(load_config(kSimulate), d);
  CHECK(fs::exists(d / "trajectory.csv"));
  CHECK(fs::exists(d / "spectrum.csv"));
  CHECK(first_line(d / "trajectory.csv").rfind("t,", 0) == 0);
  const auto m = nlohmann::json::parse(read_file(d / "manifest.json"));
  CHECK(m["experiment"] == "simulate");
  CHECK(m["seed"] == 7);
  for (const auto& o : m["outputs"]) CHECK(o["sha1"] == git_blob_sha1(read_file(d / o["file"].get<std::string>())));
  CHECK(rr.files.back().filename() == "manifest.json");
}

TEST_CASE("runs are deterministic in the seed") {
  const auto a = scratch_dir("det_a"), b = scratch_dir("det_b"), c = scratch_dir("det_c");
  auto cfg = load_config(kSimulate);
  run(cfg, a);
  cfg.threads = 3;
  run(cfg, b);
  CHECK(read_file(a / "manifest.json") == read_file(b / "manifest.json"));
  CHECK(read_file(a / "trajectory.csv") == read_file(b / "trajectory.csv"));
  cfg.seed = 8;
  run(cfg, c);
  CHECK(read_file(a / "trajectory.csv") != read_file(c / "trajectory.csv"));
}

TEST_CASE("compare writes the error table") {
  const auto d = scratch_dir("cmp");
  const auto cfg = load_config(
      "[lattice]\nN = 64\nt_macro = [0.0, 0.01]\n"
      "[init]\nkind = \"local_gibbs\"\nbeta = 2.0\np_modes = [1]\np_cos = [0.2]\n"
      "[experiment]\nkind = \"compare\"\n"
      "[compare]\nN = [32, 64]\n");
  run(cfg, d);
  CHECK(first_line(d / "errors.csv") == "N,t,field,l2_err,linf_err,l2_rel");
  CHECK(fs::exists(d / "wigner_split.csv"));
  const auto res = compare_micro_macro(cfg);
  CHECK(!res.errors.empty());
  for (const auto& e : res.errors) {
    CHECK(std::isfinite(e.l2_err));
    CHECK(e.linf_err >= 0.0);
  }
}

TEST_CASE("macro and resolvent experiments") {
  const auto d = scratch_dir("mac");
  run(load_config("[init]\nkind = \"local_gibbs\"\np_modes = [1]\np_cos = [0.2]\n"
                  "[lattice]\nt_macro = [0.0, 0.01]\n[experiment]\nkind = \"macro\"\n"),
      d);
  CHECK(fs::exists(d / "macro.csv"));
  CHECK(fs::exists(d / "macro_energy.csv"));
  const auto r = scratch_dir("res");
  run(load_config("[experiment]\nkind = \"resolvent\"\n[resolvent]\neps_ladder = [0.0625, 0.03125]\n"), r);
  CHECK(first_line(r / "convergence.csv").rfind("eps,", 0) == 0);
}

TEST_CASE("cli exit codes") {
  const auto d = scratch_dir("cli");
  const auto good = write_config(d, kSimulate);
  CHECK(cli("simulate --config " + good.string() + " --out " + (d / "ok").string()) == 0);
  CHECK(fs::exists(d / "ok" / "manifest.json"));
  CHECK(cli("simulate") == 2);
  CHECK(cli("bogus") == 2);
  const auto badd = scratch_dir("cli_bad");
  const auto bad = write_config(badd, "[model]\nnope = 1\n");
  CHECK(cli("simulate --config " + bad.string() + " --out " + (badd / "o").string()) == 2);
  const auto err = nlohmann::json::parse(read_file(badd / "o" / "error.json"));
  CHECK(err["error"]["kind"] == "config");
  const auto numd = scratch_dir("cli_num");
  const auto num = write_config(numd, "[lattice]\nt_macro = [0.0, 0.01]\n[moments]\ndt = 10.0\n");
  CHECK(cli("moments --config " + num.string() + " --out " + (numd / "o").string()) == 3);
  CHECK(cli("kernels-check") == 0);
}
