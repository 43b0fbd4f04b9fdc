#pragma once

#include <filesystem>
#include <string>

#include "bqd/observables.h"

namespace bqd {

/// Column order of series.csv.
inline constexpr const char* kSeriesHeader = "t,X_B,X_I,E_B,E_I,E_BI,S_VN,F_B,F_I";

/// Header line plus one row per record, 17 significant digits, unset values as empty fields.
std::string format_series_csv(const ObservableSeries& series);
void write_series_csv(const std::filesystem::path& path, const ObservableSeries& series);
/// Inverse of write_series_csv (records only). Throws IoError on malformed input.
ObservableSeries read_series_csv(const std::filesystem::path& path);

/// Density snapshots as stored in a BQD1 file. densities[(t * n_points + j) * n_species + s].
struct SnapshotArchive {
  std::vector<double> times;
  std::vector<double> nodes;
  std::size_t n_species = 0;
  std::vector<double> densities;

  double at(std::size_t t, std::size_t j, std::size_t s) const {
    return densities[(t * nodes.size() + j) * n_species + s];
  }
};

SnapshotArchive make_archive(const ObservableSeries& series, const Eigen::VectorXd& nodes);

/// "BQD1", little-endian u64 n_times, n_points, n_species, then f64 times, nodes and densities.
void write_bqd1(const std::filesystem::path& path, const SnapshotArchive& archive);
SnapshotArchive read_bqd1(const std::filesystem::path& path);

void write_text(const std::filesystem::path& path, const std::string& text);
std::string read_text(const std::filesystem::path& path);

/// Version string recorded in manifests.
std::string_view code_version();

} // namespace bqd
