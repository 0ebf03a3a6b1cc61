#pragma once

// TCF1 field files.
//
//   offset  size  content
//   0       4     magic "TCF1"
//   4       4     dim        (u32, 1 or 2)
//   8       4     Nx         (u32)
//   12      4     Ny         (u32, 1 when dim = 1)
//   16      8     A          (f64)
//   24      8     B          (f64, 1.0 when dim = 1)
//   32      32    reserved, zero
//   64      16*Nx*Ny  (re, im) f64 pairs, flat index ix*Ny + iy
//
// All values little-endian. Fields are always stored in grid representation.

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "toruslab/error.hpp"
#include "toruslab/torus.hpp"

namespace toruslab::tcf1 {

static_assert(std::endian::native == std::endian::little,
              "TCF1 I/O assumes a little-endian host");

inline constexpr std::size_t header_size = 64;
inline constexpr char magic[4] = {'T', 'C', 'F', '1'};

inline void save(const std::filesystem::path& path, const SpatialField& field) {
  const Torus& t = field.torus();
  std::array<unsigned char, header_size> header{};
  std::memcpy(header.data(), magic, 4);
  const std::uint32_t dims[3] = {static_cast<std::uint32_t>(t.dim()),
                                 static_cast<std::uint32_t>(t.nx()),
                                 static_cast<std::uint32_t>(t.ny())};
  std::memcpy(header.data() + 4, dims, sizeof dims);
  const double periods[2] = {t.period_x(), t.dim() == 1 ? 1.0 : t.period_y()};
  std::memcpy(header.data() + 16, periods, sizeof periods);

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(header.data()), header.size());
  static_assert(sizeof(cplx) == 2 * sizeof(double));
  out.write(reinterpret_cast<const char*>(field.values().data()),
            static_cast<std::streamsize>(field.size() * sizeof(cplx)));
  if (!out) throw IoError("write failed for " + path.string());
}

inline void save(const std::filesystem::path& path, const FourierField& field) {
  save(path, from_fourier(field));
}

/// Reads a field; the geometry is rebuilt from the header.
inline SpatialField load(const std::filesystem::path& path, FieldRole role = FieldRole::state) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::array<unsigned char, header_size> header{};
  in.read(reinterpret_cast<char*>(header.data()), header.size());
  if (in.gcount() != static_cast<std::streamsize>(header_size)) {
    throw IoError(path.string() + ": truncated TCF1 header");
  }
  if (std::memcmp(header.data(), magic, 4) != 0) {
    throw IoError(path.string() + ": bad magic, not a TCF1 file");
  }
  std::uint32_t dims[3];
  double periods[2];
  std::memcpy(dims, header.data() + 4, sizeof dims);
  std::memcpy(periods, header.data() + 16, sizeof periods);
  const auto [dim, nx, ny] = std::array{dims[0], dims[1], dims[2]};
  if (dim != 1 && dim != 2) throw IoError(path.string() + ": dim must be 1 or 2");
  if (nx == 0 || ny == 0 || nx > (1u << 16) || ny > (1u << 16) || (dim == 1 && ny != 1)) {
    throw IoError(path.string() + ": implausible grid dimensions");
  }
  TorusPtr torus;
  try {
    torus = dim == 1 ? Torus::make_1d(periods[0], static_cast<int>(nx))
                     : Torus::make_2d(periods[0], periods[1], static_cast<int>(nx),
                                      static_cast<int>(ny));
  } catch (const DomainError& e) {
    throw IoError(path.string() + ": " + e.what());
  }
  std::vector<cplx> values(torus->size());
  in.read(reinterpret_cast<char*>(values.data()),
          static_cast<std::streamsize>(values.size() * sizeof(cplx)));
  if (in.gcount() != static_cast<std::streamsize>(values.size() * sizeof(cplx))) {
    throw IoError(path.string() + ": payload shorter than header dimensions");
  }
  return SpatialField(std::move(torus), std::move(values), role);
}

/// Loads and checks the stored geometry against `expected`.
inline SpatialField load(const std::filesystem::path& path, const TorusPtr& expected,
                         FieldRole role = FieldRole::state) {
  SpatialField f = load(path, role);
  if (!f.torus().same_geometry(*expected)) {
    throw DomainError(path.string() + ": stored geometry " + f.torus().describe() +
                      " does not match " + expected->describe());
  }
  return SpatialField(expected, std::vector<cplx>(f.values().begin(), f.values().end()), role);
}

}  // namespace toruslab::tcf1
