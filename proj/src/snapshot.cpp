#include "vmfem/snapshot.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace vmfem {

namespace {

std::uint64_t to_little(std::uint64_t x) {
  if constexpr (std::endian::native == std::endian::big) {
    std::uint64_t r = 0;
    for (int b = 0; b < 8; ++b) r |= ((x >> (8 * b)) & 0xffu) << (8 * (7 - b));
    return r;
  }
  return x;
}

std::filesystem::path with_ext(const std::filesystem::path& stem, const char* ext) {
  return std::filesystem::path(stem.string() + ext);
}

}  // namespace

nlohmann::json snapshot_header(const TensorGrid& grid, double time, const std::string& field,
                               std::size_t count) {
  nlohmann::json h;
  h["format"] = "vmfem-snapshot";
  h["version"] = 1;
  h["field"] = field;
  h["dtype"] = "float64";
  h["byte_order"] = "little";
  h["count"] = count;
  h["time"] = time;
  h["degree"] = grid.degree();
  auto mesh = [](const CartesianMesh& m) {
    nlohmann::json j;
    j["lower"] = m.spec().lower;
    j["upper"] = m.spec().upper;
    j["cells"] = m.spec().cells;
    j["dofs"] = m.dims();
    return j;
  };
  h["x"] = mesh(grid.x());
  h["v"] = mesh(grid.v());
  h["layout"] = "composite index i*Nv + j, last direction fastest within each mesh";
  return h;
}

void write_snapshot(const std::filesystem::path& stem, const nlohmann::json& header,
                    std::span<const double> data) {
  nlohmann::json h = header;
  h["count"] = data.size();
  h["data_file"] = with_ext(stem, ".bin").filename().string();
  std::ofstream bin(with_ext(stem, ".bin"), std::ios::binary);
  if (!bin) throw std::runtime_error("cannot write " + with_ext(stem, ".bin").string());
  for (double v : data) {
    const std::uint64_t w = to_little(std::bit_cast<std::uint64_t>(v));
    bin.write(reinterpret_cast<const char*>(&w), sizeof w);
  }
  std::ofstream js(with_ext(stem, ".json"));
  if (!js) throw std::runtime_error("cannot write " + with_ext(stem, ".json").string());
  js << h.dump(2) << '\n';
}

Snapshot read_snapshot(const std::filesystem::path& stem) {
  Snapshot s;
  std::ifstream js(with_ext(stem, ".json"));
  if (!js) throw std::runtime_error("missing snapshot header " + with_ext(stem, ".json").string());
  s.header = nlohmann::json::parse(js);
  const std::size_t n = s.header.at("count").get<std::size_t>();
  std::ifstream bin(with_ext(stem, ".bin"), std::ios::binary | std::ios::ate);
  if (!bin) throw std::runtime_error("missing snapshot data " + with_ext(stem, ".bin").string());
  if (static_cast<std::size_t>(bin.tellg()) != n * 8)
    throw std::runtime_error("snapshot size does not match its header");
  bin.seekg(0);
  s.data.resize(n);
  for (auto& v : s.data) {
    std::uint64_t w;
    bin.read(reinterpret_cast<char*>(&w), sizeof w);
    v = std::bit_cast<double>(to_little(w));
  }
  return s;
}

}  // namespace vmfem
