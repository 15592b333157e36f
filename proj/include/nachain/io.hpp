#pragma once

#include <openssl/evp.h>

#include <array>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <vector>

#include "nachain/chain.hpp"
#include "nachain/wigner.hpp"

namespace nachain {

// Shortest round-trip representation. Stable across runs.
inline std::string fmt_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string csv_quote(const std::string& s) {
  if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

class CsvWriter {
 public:
  CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& header)
      : path_(path), out_(path, std::ios::binary) {
    if (!out_) throw std::runtime_error("cannot open " + path.string());
    columns_ = header.size();
    row_strings(header);
  }

  template <class... Ts>
  void row(const Ts&... vals) {
    std::vector<std::string> cells;
    (cells.push_back(cell(vals)), ...);
    row_strings(cells);
  }

  void row_strings(const std::vector<std::string>& cells) {
    if (cells.size() != columns_) throw std::logic_error("CsvWriter: wrong column count in " + path_.string());
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) out_ << ',';
      out_ << csv_quote(cells[i]);
    }
    out_ << "\r\n";
  }

  const std::filesystem::path& path() const { return path_; }

 private:
  static std::string cell(double v) { return fmt_double(v); }
  static std::string cell(const std::string& v) { return v; }
  static std::string cell(const char* v) { return v; }
  template <class I>
    requires std::is_integral_v<I>
  static std::string cell(I v) {
    return std::to_string(v);
  }

  std::filesystem::path path_;
  std::ofstream out_;
  std::size_t columns_ = 0;
};

inline void write_trajectory_csv(CsvWriter& w, double t, const ChainState& s) {
  for (std::size_t x = 0; x < s.N(); ++x) w.row(t, x, s.curvature[x], s.momentum[x], s.site_energy(x));
}

inline void write_wigner_csv(const std::filesystem::path& path, const WignerGrid& g, double t,
                             const std::string& source) {
  CsvWriter w(path, {"t", "eta", "j", "k", "component", "re", "im", "source"});
  for (const auto& r : g.rows)
    for (std::size_t j = 0; j < g.N; ++j) {
      const double k = g.k(r.eta, j);
      const std::pair<const char*, cplx> comps[] = {
          {"W_plus", r.w_plus[j]}, {"W_minus", g.w_minus(r, j)}, {"Y_plus", r.y_plus[j]}, {"Y_minus", r.y_minus[j]}};
      for (const auto& [name, v] : comps) w.row(t, r.eta, j, k, name, v.real(), v.imag(), source);
    }
}

// "NACHAIN1", then N as u64, then curvature and momentum as f64, all little-endian.
inline constexpr char kDumpMagic[8] = {'N', 'A', 'C', 'H', 'A', 'I', 'N', '1'};

namespace detail {
inline void put_le64(std::ostream& o, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) o.put(static_cast<char>((v >> (8 * i)) & 0xff));
}
inline std::uint64_t get_le64(std::istream& in) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) {
    const int c = in.get();
    if (c == EOF) throw std::runtime_error("truncated NACHAIN1 dump");
    v |= static_cast<std::uint64_t>(static_cast<unsigned char>(c)) << (8 * i);
  }
  return v;
}
inline std::uint64_t bits(double d) {
  std::uint64_t u;
  std::memcpy(&u, &d, sizeof u);
  return u;
}
inline double from_bits(std::uint64_t u) {
  double d;
  std::memcpy(&d, &u, sizeof d);
  return d;
}
}  // namespace detail

inline void write_dump(const std::filesystem::path& path, const ChainState& s) {
  std::ofstream o(path, std::ios::binary);
  if (!o) throw std::runtime_error("cannot open " + path.string());
  o.write(kDumpMagic, 8);
  detail::put_le64(o, s.N());
  for (double v : s.curvature) detail::put_le64(o, detail::bits(v));
  for (double v : s.momentum) detail::put_le64(o, detail::bits(v));
}

inline ChainState read_dump(const std::filesystem::path& path, const ModelParams& params) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  char magic[8];
  in.read(magic, 8);
  if (!in || std::string(magic, 8) != std::string(kDumpMagic, 8))
    throw std::runtime_error("not a NACHAIN1 dump: " + path.string());
  const std::uint64_t n = detail::get_le64(in);
  ChainState s(n, params);
  for (auto& v : s.curvature) v = detail::from_bits(detail::get_le64(in));
  for (auto& v : s.momentum) v = detail::from_bits(detail::get_le64(in));
  return s;
}

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// SHA-1 of "blob <size>\0" + content, as git hash-object computes it.
inline std::string git_blob_sha1(const std::string& content) {
  const std::string head = "blob " + std::to_string(content.size()) + std::string(1, '\0');
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  if (!ctx) throw std::runtime_error("EVP_MD_CTX_new failed");
  std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
  unsigned int len = 0;
  const bool ok = EVP_DigestInit_ex(ctx, EVP_sha1(), nullptr) == 1 &&
                  EVP_DigestUpdate(ctx, head.data(), head.size()) == 1 &&
                  EVP_DigestUpdate(ctx, content.data(), content.size()) == 1 &&
                  EVP_DigestFinal_ex(ctx, md.data(), &len) == 1;
  EVP_MD_CTX_free(ctx);
  if (!ok) throw std::runtime_error("SHA-1 digest failed");
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned i = 0; i < len; ++i) {
    out += hex[md[i] >> 4];
    out += hex[md[i] & 15];
  }
  return out;
}

struct PlotSeries {
  std::string file;     // CSV relative to the script
  std::string using_;   // gnuplot "using" clause
  std::string title;
};

inline void write_gnuplot(const std::filesystem::path& path, const std::string& title,
                          const std::string& xlabel, const std::string& ylabel,
                          const std::vector<PlotSeries>& series, bool logy = false) {
  std::ofstream o(path, std::ios::binary);
  if (!o) throw std::runtime_error("cannot open " + path.string());
  o << "set datafile separator ','\n";
  o << "set key autotitle columnhead\n";
  o << "set title '" << title << "'\n";
  o << "set xlabel '" << xlabel << "'\nset ylabel '" << ylabel << "'\n";
  if (logy) o << "set logscale y\n";
  o << "plot ";
  for (std::size_t i = 0; i < series.size(); ++i) {
    if (i) o << ", \\\n     ";
    o << "'" << series[i].file << "' using " << series[i].using_ << " with linespoints title '"
      << series[i].title << "'";
  }
  o << "\n";
}

}  // namespace nachain
