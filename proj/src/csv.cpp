#include "osckit/csv.hpp"

#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "osckit/spectrum.hpp"

namespace osckit {

namespace {

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::stringstream ss(line);
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

Real parse_cell(const std::string& cell, const std::filesystem::path& path,
                std::size_t row) {
  const char* begin = cell.c_str();
  char* end = nullptr;
  errno = 0;
  Real v = std::strtod(begin, &end);
  while (end != nullptr && (*end == ' ' || *end == '\r' || *end == '\t')) ++end;
  if (end == begin || (end != nullptr && *end != '\0') || errno == ERANGE)
    throw InputError(path.string() + ": non-numeric cell '" + cell + "' in row " +
                     std::to_string(row));
  return v;
}

}  // namespace

std::string format_number(Real v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.15g", v);
  return buf;
}

ChannelSet ingest_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open '" + path.string() + "'");

  std::string line;
  if (!std::getline(in, line)) throw InputError(path.string() + ": empty file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  std::vector<std::string> header = split_line(line);
  if (header.empty() || header.front() != "time_s")
    throw InputError(path.string() + ": first column must be 'time_s'");
  const std::size_t ncol = header.size();
  if (ncol < 2) throw InputError(path.string() + ": no data columns");

  std::vector<Real> times;
  std::vector<std::vector<Real>> cols(ncol - 1);
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> cells = split_line(line);
    if (cells.size() != ncol)
      throw InputError(path.string() + ": ragged row " + std::to_string(row) +
                       " (" + std::to_string(cells.size()) + " cells, expected " +
                       std::to_string(ncol) + ")");
    times.push_back(parse_cell(cells[0], path, row));
    for (std::size_t c = 1; c < ncol; ++c)
      cols[c - 1].push_back(parse_cell(cells[c], path, row));
  }
  if (times.empty()) throw InputError(path.string() + ": no data rows");

  Real t0 = times.front();
  Real dt = 1.0;
  if (times.size() > 1) {
    dt = (times.back() - times.front()) / static_cast<Real>(times.size() - 1);
    if (dt <= 0.0) throw InputError(path.string() + ": non-increasing time column");
    for (std::size_t i = 1; i < times.size(); ++i) {
      Real step = times[i] - times[i - 1];
      if (std::abs(step - dt) > 1e-6 * dt + 1e-12)
        throw InputError(path.string() + ": non-uniform time step at row " +
                         std::to_string(i + 2));
    }
  }

  ChannelSet cs;
  for (std::size_t c = 0; c < cols.size(); ++c) {
    UniformSeries s;
    s.name = header[c + 1];
    s.t0 = t0;
    s.dt = dt;
    s.values = Eigen::Map<const Vec>(cols[c].data(), static_cast<Index>(cols[c].size()));
    apply_name_conventions(s);
    cs.add(std::move(s));
  }
  return cs;
}

void export_csv(const ChannelSet& cs, const std::filesystem::path& path) {
  if (cs.empty()) throw InputError("refusing to export an empty ChannelSet");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write '" + path.string() + "'");
  out << "time_s";
  for (const auto& c : cs.channels) out << ',' << c.name;
  out << '\n';
  const Index n = cs.length();
  for (Index i = 0; i < n; ++i) {
    out << format_number(cs.t0() + static_cast<Real>(i) * cs.dt());
    for (const auto& c : cs.channels) out << ',' << format_number(c.values[i]);
    out << '\n';
  }
  if (!out) throw InputError("write failure on '" + path.string() + "'");
}

void export_spectrogram_csv(const Spectrogram& spec,
                            const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write '" + path.string() + "'");
  out << "time_s,freq_hz,mag_db\n";
  for (Index i = 0; i < spec.times.size(); ++i)
    for (Index j = 0; j < spec.frequencies.size(); ++j)
      out << format_number(spec.times[i]) << ',' << format_number(spec.frequencies[j])
          << ',' << format_number(spec.magnitude_db(i, j)) << '\n';
  if (!out) throw InputError("write failure on '" + path.string() + "'");
}

void write_table_csv(const std::filesystem::path& path,
                     const std::vector<std::string>& header,
                     const std::vector<std::vector<std::string>>& rows) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write '" + path.string() + "'");
  for (std::size_t i = 0; i < header.size(); ++i)
    out << (i ? "," : "") << header[i];
  out << '\n';
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << row[i];
    out << '\n';
  }
  if (!out) throw InputError("write failure on '" + path.string() + "'");
}

}  // namespace osckit
