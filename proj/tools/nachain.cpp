#include <CLI11.hpp>
#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "nachain/checks.hpp"
#include "nachain/harness.hpp"

namespace {

// 2: bad config or usage, 3: numerical failure.
int fail(const std::filesystem::path& out, const std::string& kind, const std::string& msg, int code) {
  const std::string block = nachain::error_block(kind, msg);
  std::cerr << block << "\n";
  std::error_code ec;
  std::filesystem::create_directories(out, ec);
  if (!ec) std::ofstream(out / "error.json", std::ios::binary) << block << "\n";
  return code;
}

unsigned threads_from_env() {
  const char* v = std::getenv("NACHAIN_THREADS");
  if (!v || !*v) return 0;
  try {
    return static_cast<unsigned>(std::stoul(v));
  } catch (...) {
    return 0;
  }
}

int kernels_check() {
  const auto r = nachain::kernel_identity_suite();
  const bool ok = r.kernel_diff <= 1e-12 && r.beta_vs_rate <= 1e-14 && r.rate_vs_basis <= 1e-14 &&
                  r.normalization <= 1e-10 && r.rate_at_zero <= 1e-10;
  nlohmann::ordered_json j;
  j["samples"] = r.samples;
  j["grid"] = r.grid;
  j["kernel_diff"] = r.kernel_diff;
  j["beta_vs_rate"] = r.beta_vs_rate;
  j["rate_vs_basis"] = r.rate_vs_basis;
  j["normalization"] = r.normalization;
  j["rate_at_zero"] = r.rate_at_zero;
  j["pass"] = ok;
  std::cout << j.dump(2) << "\n";
  return ok ? 0 : 3;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"nachain: harmonic chain with momentum-conserving noise"};
  app.require_subcommand(1);
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<unsigned> threads;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "config file (TOML subset)")->required()->check(CLI::ExistingFile);
    sub->add_option("--seed", seed, "override ensemble.seed");
    sub->add_option("--out", out, "output directory (overrides output.dir)");
    sub->add_option("--threads", threads, "worker threads (0: hardware; NACHAIN_THREADS as fallback)");
  };
  for (const char* name : {"simulate", "moments", "macro", "resolvent", "compare"})
    add_common(app.add_subcommand(name, std::string("run the ") + name + " experiment"));
  app.add_subcommand("kernels-check", "evaluate the kernel identities and print a JSON report");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    std::cerr << nachain::error_block("usage", e.what()) << "\n";
    return 2;
  }

  CLI::App* sub = app.get_subcommands().front();
  if (sub->get_name() == "kernels-check") return kernels_check();

  nachain::RunConfig cfg;
  std::filesystem::path out_dir = out.value_or("out");
  try {
    cfg = nachain::load_config(nachain::read_file(config_path));
    cfg.experiment = nachain::parse_experiment(sub->get_name());
    if (seed) cfg.seed = *seed;
    if (threads) cfg.threads = *threads;
    else if (cfg.threads == 0) cfg.threads = threads_from_env();
    if (!out) out_dir = cfg.out_dir;
    cfg.validate();
  } catch (const std::exception& e) {
    return fail(out_dir, "config", e.what(), 2);
  }

  try {
    std::cerr << "nachain: " << sub->get_name() << " N=" << cfg.N << " seed=" << cfg.seed << " -> "
              << out_dir.string() << "\n";
    const auto rr = nachain::run(cfg, out_dir);
    std::cerr << "nachain: wrote " << rr.files.size() << " files\n";
  } catch (const nachain::ConfigError& e) {
    return fail(out_dir, "config", e.what(), 2);
  } catch (const std::exception& e) {
    return fail(out_dir, "numerical", std::string(sub->get_name()) + ": " + e.what(), 3);
  }
  return 0;
}
