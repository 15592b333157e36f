#pragma once

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "nachain/chain.hpp"
#include "nachain/gibbs.hpp"

namespace nachain {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Values of the TOML subset: numbers, strings, booleans and flat arrays of those.
struct ConfigValue {
  using Scalar = std::variant<double, std::string, bool>;
  std::vector<Scalar> items;
  bool is_array = false;
  std::string raw;  // source text, for error messages
};

// Keys are stored as "section.key".
class ConfigTable {
 public:
  static ConfigTable parse(const std::string& text) {
    ConfigTable t;
    std::istringstream in(text);
    std::string line, section;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      line = strip(strip_comment(line));
      if (line.empty()) continue;
      if (line.front() == '[') {
        if (line.back() != ']') fail(lineno, "unterminated section header");
        section = strip(line.substr(1, line.size() - 2));
        if (section.empty()) fail(lineno, "empty section name");
        continue;
      }
      const auto eq = line.find('=');
      if (eq == std::string::npos) fail(lineno, "expected key = value");
      const std::string key = strip(line.substr(0, eq));
      if (key.empty()) fail(lineno, "empty key");
      const std::string full = section.empty() ? key : section + "." + key;
      if (t.values_.count(full)) fail(lineno, "duplicate key " + full);
      t.values_[full] = parse_value(strip(line.substr(eq + 1)), lineno);
      t.order_.push_back(full);
    }
    return t;
  }

  bool has(const std::string& key) const { return values_.count(key) != 0; }
  const std::vector<std::string>& keys() const { return order_; }

  double number(const std::string& key, double def) const {
    if (!has(key)) return def;
    return as_number(key, scalar(key));
  }
  std::int64_t integer(const std::string& key, std::int64_t def) const {
    if (!has(key)) return def;
    const double v = number(key, 0.0);
    if (v != static_cast<double>(static_cast<std::int64_t>(v)))
      throw ConfigError(key + ": expected an integer, got " + values_.at(key).raw);
    return static_cast<std::int64_t>(v);
  }
  std::string string(const std::string& key, const std::string& def) const {
    if (!has(key)) return def;
    const auto& s = scalar(key);
    if (!std::holds_alternative<std::string>(s)) throw ConfigError(key + ": expected a string");
    return std::get<std::string>(s);
  }
  bool boolean(const std::string& key, bool def) const {
    if (!has(key)) return def;
    const auto& s = scalar(key);
    if (!std::holds_alternative<bool>(s)) throw ConfigError(key + ": expected true or false");
    return std::get<bool>(s);
  }
  std::vector<double> numbers(const std::string& key, const std::vector<double>& def) const {
    if (!has(key)) return def;
    std::vector<double> out;
    for (const auto& s : values_.at(key).items) out.push_back(as_number(key, s));
    return out;
  }
  std::vector<std::string> strings(const std::string& key, const std::vector<std::string>& def) const {
    if (!has(key)) return def;
    std::vector<std::string> out;
    for (const auto& s : values_.at(key).items) {
      if (!std::holds_alternative<std::string>(s)) throw ConfigError(key + ": expected strings");
      out.push_back(std::get<std::string>(s));
    }
    return out;
  }

  // Any key outside `known` is a schema error.
  void require_known(const std::vector<std::string>& known) const {
    for (const auto& k : order_) {
      bool ok = false;
      for (const auto& n : known) ok = ok || n == k;
      if (!ok) throw ConfigError("unknown config key: " + k);
    }
  }

 private:
  [[noreturn]] static void fail(int line, const std::string& what) {
    throw ConfigError("config line " + std::to_string(line) + ": " + what);
  }
  static std::string strip(const std::string& s) {
    std::size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
  }
  static std::string strip_comment(const std::string& s) {
    bool quoted = false;
    for (std::size_t i = 0; i < s.size(); ++i) {
      if (s[i] == '"') quoted = !quoted;
      if (s[i] == '#' && !quoted) return s.substr(0, i);
    }
    return s;
  }
  static ConfigValue::Scalar parse_scalar(const std::string& tok, int line) {
    if (tok.empty()) fail(line, "missing value");
    if (tok.front() == '"') {
      if (tok.size() < 2 || tok.back() != '"') fail(line, "unterminated string");
      return tok.substr(1, tok.size() - 2);
    }
    if (tok == "true") return true;
    if (tok == "false") return false;
    std::size_t used = 0;
    double v = 0.0;
    try {
      std::string t = tok;
      t.erase(std::remove(t.begin(), t.end(), '_'), t.end());
      v = std::stod(t, &used);
      if (used != t.size()) fail(line, "bad number " + tok);
    } catch (const std::logic_error&) {
      fail(line, "bad value " + tok);
    }
    return v;
  }
  static ConfigValue parse_value(const std::string& s, int line) {
    ConfigValue v;
    v.raw = s;
    if (!s.empty() && s.front() == '[') {
      if (s.back() != ']') fail(line, "unterminated array");
      v.is_array = true;
      std::string body = s.substr(1, s.size() - 2), cur;
      bool quoted = false;
      for (char c : body) {
        if (c == '"') quoted = !quoted;
        if (c == ',' && !quoted) {
          if (!strip(cur).empty()) v.items.push_back(parse_scalar(strip(cur), line));
          cur.clear();
        } else {
          cur += c;
        }
      }
      if (!strip(cur).empty()) v.items.push_back(parse_scalar(strip(cur), line));
      return v;
    }
    v.items.push_back(parse_scalar(s, line));
    return v;
  }
  const ConfigValue::Scalar& scalar(const std::string& key) const {
    const auto& v = values_.at(key);
    if (v.is_array || v.items.size() != 1) throw ConfigError(key + ": expected a single value");
    return v.items.front();
  }
  static double as_number(const std::string& key, const ConfigValue::Scalar& s) {
    if (!std::holds_alternative<double>(s)) throw ConfigError(key + ": expected a number");
    return std::get<double>(s);
  }

  std::map<std::string, ConfigValue> values_;
  std::vector<std::string> order_;
};

enum class Experiment { simulate, moments, macro, resolvent, compare };

inline Experiment parse_experiment(const std::string& s) {
  if (s == "simulate") return Experiment::simulate;
  if (s == "moments") return Experiment::moments;
  if (s == "macro") return Experiment::macro;
  if (s == "resolvent") return Experiment::resolvent;
  if (s == "compare") return Experiment::compare;
  throw ConfigError("unknown experiment: " + s);
}

inline const char* experiment_name(Experiment e) {
  switch (e) {
    case Experiment::simulate: return "simulate";
    case Experiment::moments: return "moments";
    case Experiment::macro: return "macro";
    case Experiment::resolvent: return "resolvent";
    default: return "compare";
  }
}

struct RunConfig {
  ModelParams model;
  // lattice
  std::size_t N = 64;
  double dt = 0.0;  // 0: default for the model
  std::vector<double> t_macro{0.0};
  Sweep sweep = Sweep::three_color_randomized;
  // init
  std::string init = "gibbs";
  GibbsParams gibbs;
  MacroProfiles profiles;
  // ensemble
  std::size_t replicas = 1;
  std::uint64_t seed = 1;
  unsigned threads = 0;
  bool swap_noise = false;
  // observables / moments / macro
  std::size_t blocks = 0;  // 0: gcd(N, 32)
  int H = 4;
  double moment_dt = 0.0;
  std::size_t grid = 64;
  // resolvent
  double lambda = 20.0;
  int eta = 1;
  std::vector<double> eps_ladder{};
  double eth = 1.0;
  // compare
  std::vector<double> compare_N{};
  std::string micro = "moments";  // moments | ensemble
  // output
  std::string out_dir = "out";
  std::vector<std::string> formats{"csv"};
  Experiment experiment = Experiment::simulate;
  std::string source_text;

  void validate() const {
    try {
      model.validate();
      gibbs.validate();
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what());
    }
    if (N < 8) throw ConfigError("lattice.N must be at least 8");
    if (replicas < 1) throw ConfigError("ensemble.replicas must be at least 1");
    for (double t : t_macro)
      if (!(t >= 0.0)) throw ConfigError("lattice.t_macro values must be nonnegative");
    for (std::size_t i = 1; i < t_macro.size(); ++i)
      if (t_macro[i] < t_macro[i - 1]) throw ConfigError("lattice.t_macro must be nondecreasing");
    if (init != "gibbs" && init != "local_gibbs") throw ConfigError("init.kind must be gibbs or local_gibbs");
    if (4 * static_cast<std::size_t>(profiles.max_mode()) > N)
      throw ConfigError("profile modes must not exceed N/4");
    for (double n : compare_N)
      if (4 * static_cast<std::size_t>(profiles.max_mode()) > static_cast<std::size_t>(n))
        throw ConfigError("profile modes must not exceed N/4 for every compare.N");
    if (H < 0 || 2 * static_cast<std::size_t>(H) > N) throw ConfigError("moments.H must lie in [0, N/2]");
    if (micro != "moments" && micro != "ensemble") throw ConfigError("compare.micro must be moments or ensemble");
    for (const auto& f : formats)
      if (f != "csv" && f != "binary") throw ConfigError("output.formats entries must be csv or binary");
  }
};

namespace detail {
inline FourierProfile profile_from(const ConfigTable& t, const std::string& name, double def_mean) {
  FourierProfile p;
  p.mean = t.number("init." + name + "_mean", def_mean);
  const auto modes = t.numbers("init." + name + "_modes", {});
  const auto ca = t.numbers("init." + name + "_cos", std::vector<double>(modes.size(), 0.0));
  const auto sa = t.numbers("init." + name + "_sin", std::vector<double>(modes.size(), 0.0));
  if (ca.size() != modes.size() || sa.size() != modes.size())
    throw ConfigError("init." + name + ": _modes, _cos and _sin must have equal length");
  for (std::size_t i = 0; i < modes.size(); ++i) {
    if (modes[i] != static_cast<double>(static_cast<int>(modes[i])) || modes[i] < 1)
      throw ConfigError("init." + name + "_modes must be positive integers");
    p.modes.push_back({static_cast<int>(modes[i]), ca[i], sa[i]});
  }
  return p;
}
}  // namespace detail

inline RunConfig load_config(const std::string& text) {
  const ConfigTable t = ConfigTable::parse(text);
  std::vector<std::string> known{
      "model.alpha", "model.gamma", "lattice.N", "lattice.dt", "lattice.t_macro", "lattice.sweep",
      "init.kind", "init.beta", "init.pbar", "init.tau", "ensemble.replicas", "ensemble.seed",
      "ensemble.threads", "ensemble.swap_noise", "experiment.kind", "observables.blocks", "moments.H",
      "moments.dt", "macro.grid", "resolvent.lambda", "resolvent.eta", "resolvent.eps_ladder",
      "resolvent.eth", "compare.N", "compare.micro", "output.dir", "output.formats"};
  for (const char* f : {"p", "kappa", "beta_inv"})
    for (const char* s : {"_mean", "_modes", "_cos", "_sin"}) known.push_back(std::string("init.") + f + s);
  t.require_known(known);

  RunConfig c;
  c.source_text = text;
  c.model.alpha = t.number("model.alpha", 1.0);
  c.model.gamma = t.number("model.gamma", 1.0);
  const auto n = t.integer("lattice.N", 64);
  if (n < 8) throw ConfigError("lattice.N must be at least 8");
  c.N = static_cast<std::size_t>(n);
  c.dt = t.number("lattice.dt", 0.0);
  c.t_macro = t.numbers("lattice.t_macro", {0.0});
  if (t.has("lattice.sweep")) {
    try {
      c.sweep = parse_sweep(t.string("lattice.sweep", ""));
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what());
    }
  }
  c.init = t.string("init.kind", "gibbs");
  c.gibbs.beta = t.number("init.beta", 1.0);
  c.gibbs.pbar = t.number("init.pbar", 0.0);
  c.gibbs.tau = t.number("init.tau", 0.0);
  if (c.init == "local_gibbs") {
    c.profiles.p = detail::profile_from(t, "p", 0.0);
    c.profiles.kappa = detail::profile_from(t, "kappa", 0.0);
    c.profiles.beta_inv = detail::profile_from(t, "beta_inv", 1.0 / c.gibbs.beta);
  } else {
    c.profiles.p = FourierProfile::constant(c.gibbs.pbar);
    c.profiles.kappa = FourierProfile::constant(c.model.alpha > 0.0 ? c.gibbs.tau / c.model.alpha : 0.0);
    c.profiles.beta_inv = FourierProfile::constant(1.0 / c.gibbs.beta);
  }
  const auto reps = t.integer("ensemble.replicas", 1);
  if (reps < 1) throw ConfigError("ensemble.replicas must be at least 1");
  c.replicas = static_cast<std::size_t>(reps);
  c.seed = static_cast<std::uint64_t>(t.integer("ensemble.seed", 1));
  c.threads = static_cast<unsigned>(t.integer("ensemble.threads", 0));
  c.swap_noise = t.boolean("ensemble.swap_noise", false);
  c.experiment = parse_experiment(t.string("experiment.kind", "simulate"));
  c.blocks = static_cast<std::size_t>(t.integer("observables.blocks", 0));
  c.H = static_cast<int>(t.integer("moments.H", 4));
  c.moment_dt = t.number("moments.dt", 0.0);
  c.grid = static_cast<std::size_t>(t.integer("macro.grid", 64));
  c.lambda = t.number("resolvent.lambda", 20.0);
  c.eta = static_cast<int>(t.integer("resolvent.eta", 1));
  c.eps_ladder = t.numbers("resolvent.eps_ladder", {});
  c.eth = t.number("resolvent.eth", 1.0);
  c.compare_N = t.numbers("compare.N", {});
  c.micro = t.string("compare.micro", "moments");
  c.out_dir = t.string("output.dir", "out");
  c.formats = t.strings("output.formats", {"csv"});
  c.validate();
  return c;
}

}  // namespace nachain
