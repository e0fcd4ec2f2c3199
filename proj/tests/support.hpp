#pragma once

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "softsensor/dataio.hpp"
#include "softsensor/matrix.hpp"

namespace testing {

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            ("softsensor_" + tag + "_" + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline void write_text(const std::filesystem::path& p, const std::string& text) {
  std::ofstream f(p, std::ios::binary);
  f << text;
}

inline std::string read_text(const std::filesystem::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::ostringstream s;
  s << f.rdbuf();
  return s.str();
}

inline bool close_rel(double a, double b, double tol) {
  return std::abs(a - b) <= tol * std::max({1.0, std::abs(a), std::abs(b)});
}

// River-like synthetic record set: seven surrogates plus TRP and NO3N,
// 15-minute steps from 2010-01-01. Every `gap`-th row loses its pH.
inline std::string synthetic_csv(std::size_t n, unsigned seed, std::size_t gap = 0) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> z(0.0, 1.0);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::ostringstream out;
  out.precision(17);
  out << "Timestamp,Flow,Temp,pH,DOsat,Turb,EC,Chl,TRP,NO3N\n";
  for (std::size_t i = 0; i < n; ++i) {
    const double flow = std::exp(z(gen));
    const double temp = 2 + 18 * u(gen);
    const double ph = 7 + 1.5 * u(gen);
    const double dosat = 60 + 60 * u(gen);
    const double turb = std::exp(1 + z(gen));
    const double ec = 300 + 600 * u(gen);
    const double chl = std::exp(z(gen));
    const double trp = 0.02 + 0.0002 * ec + 0.05 * std::sin(temp / 3) + 0.01 * z(gen);
    const double no3 = 3 + 0.01 * ec - 0.2 * temp + 0.3 * z(gen);
    out << softsensor::dataio::format_timestamp(1262304000 + 900 * static_cast<std::int64_t>(i),
                                                "%Y-%m-%dT%H:%M:%S")
        << ',' << flow << ',' << temp << ',';
    if (gap && i % gap == gap - 1) out << "NaN";
    else out << ph;
    out << ',' << dosat << ',' << turb << ',' << ec << ',' << chl << ',' << trp << ',' << no3
        << '\n';
  }
  return out.str();
}

inline softsensor::Matrix random_matrix(std::size_t n, std::size_t p, std::mt19937_64& gen) {
  std::normal_distribution<double> z(0.0, 1.0);
  softsensor::Matrix x(n, p);
  for (std::size_t c = 0; c < p; ++c) {
    for (std::size_t r = 0; r < n; ++r) x(r, c) = z(gen);
  }
  return x;
}

}  // namespace testing
