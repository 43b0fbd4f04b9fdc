#include "bqd/io.h"

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>

#include <fmt/format.h>

#include "bqd/error.h"

#ifndef BQD_VERSION
#define BQD_VERSION "unknown"
#endif

namespace bqd {

std::string_view code_version() { return BQD_VERSION; }

namespace {

void put(std::string& row, const std::optional<double>& v) {
  row += ',';
  if (v) row += fmt::format("{:.17g}", *v);
}

std::optional<double> field(const std::string& s, const std::filesystem::path& path, std::size_t line) {
  if (s.empty()) return std::nullopt;
  try {
    std::size_t used = 0;
    const double x = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return x;
  } catch (const std::exception&) {
    throw IoError(fmt::format("{}:{}: bad number '{}'", path.string(), line, s));
  }
}

template <class T> void put_le(std::ofstream& out, T value) {
  static_assert(sizeof(T) == 8);
  auto bits = std::bit_cast<std::uint64_t>(value);
  unsigned char bytes[8];
  for (int i = 0; i < 8; ++i) bytes[i] = static_cast<unsigned char>(bits >> (8 * i));
  out.write(reinterpret_cast<const char*>(bytes), 8);
}

template <class T> T get_le(std::ifstream& in, const std::filesystem::path& path) {
  unsigned char bytes[8];
  if (!in.read(reinterpret_cast<char*>(bytes), 8)) throw IoError(fmt::format("{}: truncated BQD1 file", path.string()));
  std::uint64_t bits = 0;
  for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(bytes[i]) << (8 * i);
  return std::bit_cast<T>(bits);
}

} // namespace

std::string format_series_csv(const ObservableSeries& series) {
  std::string out = kSeriesHeader;
  out += '\n';
  for (const auto& r : series.records()) {
    std::string row = fmt::format("{:.17g}", r.time);
    for (const auto& v : {r.x_bath, r.x_impurity, r.e_bath, r.e_impurity, r.e_interspecies, r.entropy, r.frag_bath,
                          r.frag_impurity})
      put(row, v);
    out += row;
    out += '\n';
  }
  return out;
}

void write_series_csv(const std::filesystem::path& path, const ObservableSeries& series) {
  write_text(path, format_series_csv(series));
}

ObservableSeries read_series_csv(const std::filesystem::path& path) {
  std::istringstream in(read_text(path));
  std::string line;
  if (!std::getline(in, line) || line != kSeriesHeader)
    throw IoError(fmt::format("{}: missing series header", path.string()));
  ObservableSeries series;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::size_t start = 0;
    while (true) {
      const auto comma = line.find(',', start);
      cells.push_back(line.substr(start, comma == std::string::npos ? std::string::npos : comma - start));
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    if (cells.size() != 9) throw IoError(fmt::format("{}:{}: expected 9 columns", path.string(), line_no));
    const auto t = field(cells[0], path, line_no);
    if (!t) throw IoError(fmt::format("{}:{}: missing time", path.string(), line_no));
    ObservableRecord r;
    r.time = *t;
    r.x_bath = field(cells[1], path, line_no);
    r.x_impurity = field(cells[2], path, line_no);
    r.e_bath = field(cells[3], path, line_no);
    r.e_impurity = field(cells[4], path, line_no);
    r.e_interspecies = field(cells[5], path, line_no);
    r.entropy = field(cells[6], path, line_no);
    r.frag_bath = field(cells[7], path, line_no);
    r.frag_impurity = field(cells[8], path, line_no);
    try {
      series.append(r);
    } catch (const DomainError& e) {
      throw IoError(fmt::format("{}:{}: {}", path.string(), line_no, e.what()));
    }
  }
  return series;
}

SnapshotArchive make_archive(const ObservableSeries& series, const Eigen::VectorXd& nodes) {
  SnapshotArchive a;
  a.nodes.assign(nodes.data(), nodes.data() + nodes.size());
  const auto& snaps = series.snapshots();
  if (snaps.empty()) return a;
  a.n_species = snaps.front().densities.size();
  const std::size_t np = a.nodes.size();
  a.densities.resize(snaps.size() * np * a.n_species);
  for (std::size_t t = 0; t < snaps.size(); ++t) {
    if (snaps[t].densities.size() != a.n_species) throw DomainError("snapshots disagree on species count");
    a.times.push_back(snaps[t].time);
    for (std::size_t s = 0; s < a.n_species; ++s) {
      const auto& d = snaps[t].densities[s];
      if (static_cast<std::size_t>(d.size()) != np) throw DomainError("snapshot length differs from grid");
      for (std::size_t j = 0; j < np; ++j) a.densities[(t * np + j) * a.n_species + s] = d(static_cast<Eigen::Index>(j));
    }
  }
  return a;
}

void write_bqd1(const std::filesystem::path& path, const SnapshotArchive& a) {
  if (a.densities.size() != a.times.size() * a.nodes.size() * a.n_species)
    throw DomainError("snapshot archive sizes are inconsistent");
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError(fmt::format("cannot open {} for writing", path.string()));
  out.write("BQD1", 4);
  put_le<std::uint64_t>(out, a.times.size());
  put_le<std::uint64_t>(out, a.nodes.size());
  put_le<std::uint64_t>(out, a.n_species);
  for (double v : a.times) put_le(out, v);
  for (double v : a.nodes) put_le(out, v);
  for (double v : a.densities) put_le(out, v);
  if (!out.flush()) throw IoError(fmt::format("write to {} failed", path.string()));
}

SnapshotArchive read_bqd1(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(fmt::format("cannot open {}", path.string()));
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, "BQD1", 4) != 0)
    throw IoError(fmt::format("{}: not a BQD1 file", path.string()));
  const auto nt = get_le<std::uint64_t>(in, path);
  const auto np = get_le<std::uint64_t>(in, path);
  const auto ns = get_le<std::uint64_t>(in, path);
  const auto size = std::filesystem::file_size(path);
  if (nt > size || np > size || ns > size || 28 + 8 * (nt + np + nt * np * ns) != size)
    throw IoError(fmt::format("{}: header counts do not match file size", path.string()));
  SnapshotArchive a;
  a.n_species = ns;
  a.times.resize(nt);
  a.nodes.resize(np);
  a.densities.resize(nt * np * ns);
  for (auto& v : a.times) v = get_le<double>(in, path);
  for (auto& v : a.nodes) v = get_le<double>(in, path);
  for (auto& v : a.densities) v = get_le<double>(in, path);
  return a;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError(fmt::format("cannot open {} for writing", path.string()));
  out << text;
  if (!out.flush()) throw IoError(fmt::format("write to {} failed", path.string()));
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(fmt::format("cannot open {}", path.string()));
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

} // namespace bqd
