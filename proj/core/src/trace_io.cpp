#include "sgopt/trace_io.hpp"

#include <array>
#include <charconv>
#include <istream>
#include <ostream>
#include <sstream>
#include <vector>

namespace sgopt {

namespace {

constexpr const char* kBaseHeader = "k,mse,disagreement,comm_expected,comm_realized,szo_count,sfo_count";

std::vector<std::string> split_commas(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream stream(line);
  while (std::getline(stream, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

template <typename T>
T parse_cell(const std::string& cell, std::size_t line, std::size_t column) {
  T value{};
  const char* begin = cell.data();
  const char* end = begin + cell.size();
  auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc{} || ptr != end) {
    throw TraceFormatError("line " + std::to_string(line) + ", column " + std::to_string(column) +
                           ": cannot parse '" + cell + "'");
  }
  return value;
}

void write_row_prefix(std::ostream& out, const TraceRow& row) {
  out << row.k << ',' << format_double(row.mse) << ',' << format_double(row.disagreement) << ','
      << format_double(row.comm_expected) << ',' << format_double(row.comm_realized) << ',' << row.szo_count << ','
      << row.sfo_count;
}

}  // namespace

std::string format_double(double value) {
  std::array<char, 64> buf{};
  auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value);
  if (ec != std::errc{}) throw TraceFormatError("cannot format floating-point value");
  return std::string(buf.data(), ptr);
}

void write_trace_csv(std::ostream& out, const Trace& trace) {
  const bool with_test = trace.has_test_error();
  out << kBaseHeader << (with_test ? ",test_error" : "") << '\n';
  for (const TraceRow& row : trace.rows) {
    write_row_prefix(out, row);
    if (with_test) out << ',' << format_double(row.test_error.value_or(0.0));
    out << '\n';
  }
}

Trace read_trace_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw TraceFormatError("empty trace file");
  const std::string base = kBaseHeader;
  bool with_test = false;
  if (line == base + ",test_error") {
    with_test = true;
  } else if (line != base) {
    throw TraceFormatError("unexpected header '" + line + "'");
  }
  const std::size_t columns = with_test ? 8 : 7;
  Trace trace;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto cells = split_commas(line);
    if (cells.size() != columns) {
      throw TraceFormatError("line " + std::to_string(line_no) + ": expected " + std::to_string(columns) +
                             " columns, got " + std::to_string(cells.size()));
    }
    TraceRow row;
    row.k = parse_cell<std::int64_t>(cells[0], line_no, 1);
    row.mse = parse_cell<double>(cells[1], line_no, 2);
    row.disagreement = parse_cell<double>(cells[2], line_no, 3);
    row.comm_expected = parse_cell<double>(cells[3], line_no, 4);
    row.comm_realized = parse_cell<double>(cells[4], line_no, 5);
    row.szo_count = parse_cell<std::uint64_t>(cells[5], line_no, 6);
    row.sfo_count = parse_cell<std::uint64_t>(cells[6], line_no, 7);
    if (with_test) row.test_error = parse_cell<double>(cells[7], line_no, 8);
    trace.rows.push_back(row);
  }
  return trace;
}

void write_ensemble_csv(std::ostream& out, const EnsembleTrace& ensemble) {
  const bool with_test = ensemble.mean.has_test_error();
  out << kBaseHeader << (with_test ? ",test_error" : "") << ",mse_se,disagreement_se"
      << (with_test ? ",test_error_se" : "") << '\n';
  for (std::size_t r = 0; r < ensemble.mean.rows.size(); ++r) {
    const TraceRow& row = ensemble.mean.rows[r];
    write_row_prefix(out, row);
    if (with_test) out << ',' << format_double(row.test_error.value_or(0.0));
    out << ',' << format_double(ensemble.mse_se[r]) << ',' << format_double(ensemble.disagreement_se[r]);
    if (with_test) out << ',' << format_double(ensemble.test_error_se[r]);
    out << '\n';
  }
}

}  // namespace sgopt
