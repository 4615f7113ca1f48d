#pragma once

#include <cmath>
#include <fstream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "eotx/calib.hpp"

namespace eotx {

class ParseError : public std::runtime_error {
public:
  ParseError(const std::string& file, std::size_t line, const std::string& msg)
      : std::runtime_error(file + ":" + std::to_string(line) + ": " + msg), line_(line) {}
  std::size_t line() const { return line_; }

private:
  std::size_t line_;
};

/// Row-oriented CSV writer, 12 significant digits.
class CsvWriter {
public:
  CsvWriter(std::ostream& os, const std::vector<std::string>& header) : os_(os) {
    os_.precision(12);
    for (std::size_t i = 0; i < header.size(); ++i) os_ << (i ? "," : "") << header[i];
    os_ << '\n';
  }

  CsvWriter& operator<<(double v) {
    sep();
    if (std::isnan(v)) os_ << "nan";
    else os_ << v;
    return *this;
  }
  CsvWriter& operator<<(const std::string& s) {
    sep();
    os_ << s;
    return *this;
  }
  void end_row() {
    os_ << '\n';
    first_ = true;
  }

private:
  void sep() {
    if (!first_) os_ << ',';
    first_ = false;
  }
  std::ostream& os_;
  bool first_ = true;
};

/// omega_hz,value,sigma; omega is converted to rad/s.
inline SyntheticSpectrum read_spectrum(std::istream& in, const std::string& name = "<input>") {
  std::string line;
  std::size_t ln = 0;
  SyntheticSpectrum s;
  auto trim = [](std::string t) {
    const auto b = t.find_first_not_of(" \t\r");
    const auto e = t.find_last_not_of(" \t\r");
    return b == std::string::npos ? std::string() : t.substr(b, e - b + 1);
  };
  bool header = false;
  while (std::getline(in, line)) {
    ++ln;
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string c;
    while (std::getline(ss, c, ',')) cells.push_back(trim(c));
    if (!header) {
      if (cells != std::vector<std::string>{"omega_hz", "value", "sigma"})
        throw ParseError(name, ln, "expected header omega_hz,value,sigma");
      header = true;
      continue;
    }
    if (cells.size() != 3) throw ParseError(name, ln, "expected 3 columns, got " + std::to_string(cells.size()));
    double v[3];
    for (int k = 0; k < 3; ++k) {
      std::size_t pos = 0;
      try {
        v[k] = std::stod(cells[k], &pos);
      } catch (const std::exception&) {
        pos = std::string::npos;
      }
      if (pos != cells[k].size() || !std::isfinite(v[k]))
        throw ParseError(name, ln, "not a finite number: '" + cells[k] + "'");
    }
    if (!(v[2] > 0)) throw ParseError(name, ln, "sigma must be positive");
    s.omega.push_back(from_hz(v[0]));
    s.values.push_back(v[1]);
    s.sigma.push_back(v[2]);
  }
  if (!header) throw ParseError(name, ln, "missing header");
  if (s.omega.empty()) throw ParseError(name, ln, "no data rows");
  return s;
}

inline SyntheticSpectrum read_spectrum_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(path, 0, "cannot open file");
  return read_spectrum(in, path);
}

inline void write_spectrum(std::ostream& os, const SyntheticSpectrum& s) {
  CsvWriter w(os, {"omega_hz", "value", "sigma"});
  for (std::size_t i = 0; i < s.omega.size(); ++i) {
    w << to_hz(s.omega[i]) << s.values[i] << s.sigma[i];
    w.end_row();
  }
}

} // namespace eotx
