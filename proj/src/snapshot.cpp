#include "fraq/snapshot.hpp"

#include <algorithm>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>

#include "json.hpp"

namespace fraq {

namespace {

void put_le(std::ostream& os, double v) {
  auto bits = std::bit_cast<std::uint64_t>(v);
  char bytes[8];
  for (int i = 0; i < 8; ++i) bytes[i] = char((bits >> (8 * i)) & 0xffu);
  os.write(bytes, 8);
}

double get_le(const unsigned char* p) {
  std::uint64_t bits = 0;
  for (int i = 0; i < 8; ++i) bits |= std::uint64_t(p[i]) << (8 * i);
  return std::bit_cast<double>(bits);
}

}  // namespace

std::filesystem::path sidecar_path(const std::filesystem::path& path) {
  auto side = path;
  side.replace_extension(".json");
  return side;
}

std::vector<std::size_t> ascending_mode_order(const TorusGrid& grid) {
  std::vector<std::size_t> order;
  order.reserve(grid.retained_count());
  const int half = grid.n() / 2;
  if (grid.dim() == 1) {
    for (int k = -half + 1; k < half; ++k) order.push_back(grid.index_of(k));
  } else {
    for (int k1 = -half + 1; k1 < half; ++k1)
      for (int k2 = -half + 1; k2 < half; ++k2) order.push_back(grid.index_of(k1, k2));
  }
  return order;
}

void write_snapshot(const std::filesystem::path& path, std::span<const SpectralField> fields) {
  if (fields.empty()) throw ValidationError("write_snapshot: no fields");
  const TorusGrid& grid = fields.front().grid();
  const auto order = ascending_mode_order(grid);
  std::ofstream os(path, std::ios::binary);
  if (!os) throw ValidationError("cannot open " + path.string() + " for writing");
  for (const auto& f : fields) {
    if (!(f.grid() == grid)) throw ValidationError("write_snapshot: mixed grids");
    for (auto idx : order) {
      put_le(os, f[idx].real());
      put_le(os, f[idx].imag());
    }
  }
  nlohmann::json side = {{"d", grid.dim()},
                         {"n", grid.n()},
                         {"normalization", "orthonormal"},
                         {"layout", "rowmajor-ascending-k"},
                         {"count", fields.size()}};
  std::ofstream js(sidecar_path(path));
  if (!js) throw ValidationError("cannot write sidecar for " + path.string());
  js << side.dump(2) << '\n';
}

void write_snapshot(const std::filesystem::path& path, const SpectralField& field) {
  write_snapshot(path, std::span<const SpectralField>(&field, 1));
}

std::vector<SpectralField> read_snapshot(const std::filesystem::path& path) {
  std::ifstream js(sidecar_path(path));
  if (!js) throw ValidationError("missing sidecar for " + path.string());
  auto side = nlohmann::json::parse(js);
  if (side.at("normalization") != "orthonormal" || side.at("layout") != "rowmajor-ascending-k") {
    throw ValidationError("unsupported snapshot layout in " + path.string());
  }
  TorusGrid grid(side.at("d").get<int>(), side.at("n").get<int>());
  const std::size_t count = side.value("count", std::size_t{1});
  const auto order = ascending_mode_order(grid);

  std::ifstream is(path, std::ios::binary);
  if (!is) throw ValidationError("cannot open " + path.string());
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
  const std::size_t record = order.size() * 16;
  if (bytes.size() != record * count) {
    throw ValidationError("snapshot " + path.string() + " has unexpected size");
  }
  std::vector<SpectralField> out;
  out.reserve(count);
  const unsigned char* p = bytes.data();
  for (std::size_t r = 0; r < count; ++r) {
    SpectralField f(grid);
    for (auto idx : order) {
      f[idx] = cplx(get_le(p), get_le(p + 8));
      p += 16;
    }
    out.push_back(std::move(f));
  }
  return out;
}

}  // namespace fraq
