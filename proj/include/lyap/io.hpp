#pragma once

// Output plumbing for the CLI: overwrite-safe output directory, SHA-256
// digests (OpenSSL), the experiment manifest and a small SVG plot.

#include <openssl/evp.h>

#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

namespace lyap {

inline constexpr const char* kToolVersion = "1.0.0";

inline std::string sha256_hex(const std::string& bytes) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr) != 1)
    throw std::runtime_error("sha256: digest failed");
  std::ostringstream o;
  for (unsigned i = 0; i < len; ++i) o << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(md[i]);
  return o.str();
}

inline std::string utc_timestamp() {
  const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

/// Refusing to overwrite an existing output without --force.
class OverwriteRefused : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Collects output files in one directory and records their digests. Files
/// are only written after every planned name has been checked, so a refused
/// run leaves the directory untouched.
class OutputDir {
 public:
  OutputDir(std::filesystem::path dir, bool force) : dir_(std::move(dir)), force_(force) {}

  void plan(const std::vector<std::string>& names) const {
    for (const auto& n : names)
      if (!force_ && std::filesystem::exists(dir_ / n))
        throw OverwriteRefused("refusing to overwrite " + (dir_ / n).string() + " (use --force)");
  }

  void write(const std::string& name, const std::string& bytes) {
    std::filesystem::create_directories(dir_);
    std::ofstream out(dir_ / name, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + (dir_ / name).string());
    out << bytes;
    if (!out) throw std::runtime_error("write failed for " + (dir_ / name).string());
    digests_.push_back({{"file", name}, {"sha256", sha256_hex(bytes)}, {"bytes", bytes.size()}});
  }

  const nlohmann::json& digests() const { return digests_; }
  const std::filesystem::path& path() const { return dir_; }

 private:
  std::filesystem::path dir_;
  bool force_;
  nlohmann::json digests_ = nlohmann::json::array();
};

struct Manifest {
  nlohmann::json config;
  std::uint64_t master_seed = 0;
  std::string command;
  std::string started;
  std::string finished;
  int exit_code = 0;

  nlohmann::json to_json(const OutputDir& out) const {
    return {{"schema_version", 1},
            {"tool_version", kToolVersion},
            {"command", command},
            {"master_seed", master_seed},
            {"config", config},
            {"started", started},
            {"finished", finished},
            {"exit_code", exit_code},
            {"outputs", out.digests()}};
  }
};

struct SvgSeries {
  std::vector<double> x, y, err;
  std::string label;
};

/// Log-x plot of ratio against gamma with error bars and a horizontal target line.
inline std::string svg_ratio_plot(const SvgSeries& s, double target, const std::string& title) {
  const double W = 640, H = 400, L = 70, R = 20, T = 40, B = 50;
  double x0 = 1e300, x1 = -1e300, y0 = target, y1 = target;
  for (std::size_t i = 0; i < s.x.size(); ++i) {
    if (!(s.x[i] > 0.0) || !std::isfinite(s.y[i])) continue;
    x0 = std::min(x0, std::log10(s.x[i]));
    x1 = std::max(x1, std::log10(s.x[i]));
    const double e = i < s.err.size() ? s.err[i] : 0.0;
    y0 = std::min(y0, s.y[i] - e);
    y1 = std::max(y1, s.y[i] + e);
  }
  if (!(x1 > x0)) {
    x0 -= 0.5;
    x1 += 0.5;
  }
  const double pad = std::max(1e-12, 0.1 * (y1 - y0));
  y0 -= pad;
  y1 += pad;
  auto px = [&](double x) { return L + (std::log10(x) - x0) / (x1 - x0) * (W - L - R); };
  auto py = [&](double y) { return H - B - (y - y0) / (y1 - y0) * (H - T - B); };
  std::ostringstream o;
  o << std::setprecision(6);
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\">\n";
  o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  o << "<text x=\"" << W / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"15\">" << title << "</text>\n";
  o << "<line x1=\"" << L << "\" y1=\"" << H - B << "\" x2=\"" << W - R << "\" y2=\"" << H - B << "\" stroke=\"black\"/>\n";
  o << "<line x1=\"" << L << "\" y1=\"" << T << "\" x2=\"" << L << "\" y2=\"" << H - B << "\" stroke=\"black\"/>\n";
  o << "<text x=\"" << W / 2 << "\" y=\"" << H - 12 << "\" text-anchor=\"middle\" font-size=\"13\">gamma (log scale)</text>\n";
  o << "<text x=\"16\" y=\"" << H / 2 << "\" font-size=\"13\" transform=\"rotate(-90 16 " << H / 2
    << ")\" text-anchor=\"middle\">" << s.label << "</text>\n";
  for (int e = static_cast<int>(std::ceil(x0)); e <= static_cast<int>(std::floor(x1)); ++e) {
    const double x = px(std::pow(10.0, e));
    o << "<text x=\"" << x << "\" y=\"" << H - B + 16 << "\" text-anchor=\"middle\" font-size=\"11\">1e" << e << "</text>\n";
  }
  for (double v : {y0 + pad, y1 - pad})
    o << "<text x=\"" << L - 6 << "\" y=\"" << py(v) + 4 << "\" text-anchor=\"end\" font-size=\"11\">" << v << "</text>\n";
  o << "<line x1=\"" << L << "\" y1=\"" << py(target) << "\" x2=\"" << W - R << "\" y2=\"" << py(target)
    << "\" stroke=\"gray\" stroke-dasharray=\"6,4\"/>\n";
  for (std::size_t i = 0; i < s.x.size(); ++i) {
    if (!(s.x[i] > 0.0) || !std::isfinite(s.y[i])) continue;
    const double e = i < s.err.size() ? s.err[i] : 0.0;
    o << "<line x1=\"" << px(s.x[i]) << "\" y1=\"" << py(s.y[i] - e) << "\" x2=\"" << px(s.x[i]) << "\" y2=\""
      << py(s.y[i] + e) << "\" stroke=\"steelblue\"/>\n";
    o << "<circle cx=\"" << px(s.x[i]) << "\" cy=\"" << py(s.y[i]) << "\" r=\"4\" fill=\"steelblue\"/>\n";
  }
  o << "</svg>\n";
  return o.str();
}

}  // namespace lyap
