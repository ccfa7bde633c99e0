#pragma once

#include <charconv>
#include <cmath>
#include <cstddef>
#include <ostream>
#include <span>
#include <string>
#include <string_view>

namespace brwmf {

/// Minimal CSV writer. Doubles use the shortest round-trip representation,
/// so output bytes depend only on the values written.
class CsvWriter {
 public:
  explicit CsvWriter(std::ostream& os) : os_(os) {}

  CsvWriter& header(std::span<const std::string> names) {
    for (const auto& n : names) field(std::string_view(n));
    return end_row();
  }

  CsvWriter& field(double v) {
    sep();
    if (std::isnan(v)) {
      os_ << "nan";
    } else if (std::isinf(v)) {
      os_ << (v > 0 ? "inf" : "-inf");
    } else {
      char buf[32];
      auto res = std::to_chars(buf, buf + sizeof buf, v);
      os_.write(buf, res.ptr - buf);
    }
    return *this;
  }
  CsvWriter& field(std::size_t v) {
    sep();
    os_ << v;
    return *this;
  }
  CsvWriter& field(int v) {
    sep();
    os_ << v;
    return *this;
  }
  CsvWriter& field(bool v) {
    sep();
    os_ << (v ? 1 : 0);
    return *this;
  }
  CsvWriter& field(std::string_view v) {
    sep();
    os_ << v;
    return *this;
  }
  CsvWriter& field(const char* v) { return field(std::string_view(v)); }

  CsvWriter& end_row() {
    os_ << '\n';
    first_ = true;
    return *this;
  }

 private:
  void sep() {
    if (!first_) os_ << ',';
    first_ = false;
  }

  std::ostream& os_;
  bool first_ = true;
};

}  // namespace brwmf
