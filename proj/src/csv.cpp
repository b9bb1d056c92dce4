#include "gcngp/csv.hpp"

#include <charconv>
#include <cmath>
#include <stdexcept>

namespace gcngp {

std::string format_double(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buf[64];
  const auto result = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, result.ptr);
}

CsvWriter::CsvWriter(std::ostream& out, std::initializer_list<std::string_view> header)
    : out_(out), columns_(header.size()) {
  for (auto name : header) *this << name;
  end_row();
}

CsvWriter::CsvWriter(std::ostream& out, const std::vector<std::string>& header)
    : out_(out), columns_(header.size()) {
  for (const auto& name : header) *this << std::string_view(name);
  end_row();
}

void CsvWriter::separator() {
  if (column_ == columns_) throw std::logic_error("CsvWriter: too many columns in row");
  if (column_ > 0) out_ << ',';
  ++column_;
}

CsvWriter& CsvWriter::operator<<(double value) {
  separator();
  out_ << format_double(value);
  return *this;
}

CsvWriter& CsvWriter::operator<<(long long value) {
  separator();
  out_ << value;
  return *this;
}

CsvWriter& CsvWriter::operator<<(std::string_view text) {
  separator();
  out_ << text;
  return *this;
}

void CsvWriter::end_row() {
  if (column_ != columns_) throw std::logic_error("CsvWriter: incomplete row");
  out_ << '\n';
  column_ = 0;
}

}  // namespace gcngp
