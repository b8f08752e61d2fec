#pragma once

#include <charconv>
#include <cmath>
#include <fstream>
#include <string>
#include <string_view>
#include <vector>

#include "glueshadow/errors.hpp"

namespace glueshadow::csv {

/// Shortest decimal that reads back to the same double.
inline std::string number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

inline std::string number(long v) { return std::to_string(v); }
inline std::string number(std::size_t v) { return std::to_string(v); }
inline std::string number(int v) { return std::to_string(v); }

/// Line-buffered CSV writer. Each row is flushed so a run that aborts keeps
/// everything written so far.
class Writer {
 public:
  Writer(const std::string& path, std::vector<std::string> header) : out_(path), columns_(header.size()) {
    if (!out_) throw usage_error("cannot open " + path + " for writing");
    row(header);
  }

  void row(const std::vector<std::string>& cells) {
    if (cells.size() != columns_) throw usage_error("csv row has the wrong number of cells");
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) out_ << ',';
      out_ << cells[i];
    }
    out_ << '\n';
    out_.flush();
  }

 private:
  std::ofstream out_;
  std::size_t columns_;
};

}  // namespace glueshadow::csv
