#pragma once

// Binary field snapshots: little-endian doubles, interleaved (re, im), one
// record per field holding the retained modes in row-major order of the
// lattice sorted by (k1, ..., kd) ascending.  A JSON sidecar next to the
// binary file describes the layout.

#include <filesystem>
#include <vector>

#include "fraq/spectral.hpp"

namespace fraq {

/// Retained-lattice flat indices in ascending (k1, k2) order.
std::vector<std::size_t> ascending_mode_order(const TorusGrid& grid);

/// Writes `path` (binary) and `path` with extension replaced by ".json".
/// Several fields are stored back to back; the sidecar records the count.
void write_snapshot(const std::filesystem::path& path, std::span<const SpectralField> fields);
void write_snapshot(const std::filesystem::path& path, const SpectralField& field);

/// Reads every record of a snapshot written by write_snapshot.
std::vector<SpectralField> read_snapshot(const std::filesystem::path& path);

std::filesystem::path sidecar_path(const std::filesystem::path& path);

}  // namespace fraq
