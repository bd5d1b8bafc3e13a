#pragma once
// Binary snapshots: little-endian float64 array (<stem>.bin) plus a JSON
// header sidecar (<stem>.json) describing it.

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "vmfem/grid.hpp"

namespace vmfem {

struct Snapshot {
  nlohmann::json header;
  std::vector<double> data;
};

// Header carries dims (nodes per direction, x then v), degree, bounds, time,
// the byte order and the element count; `extra` is merged in.
nlohmann::json snapshot_header(const TensorGrid& grid, double time, const std::string& field,
                               std::size_t count);

void write_snapshot(const std::filesystem::path& stem, const nlohmann::json& header,
                    std::span<const double> data);
// std::runtime_error on missing files or a size mismatch with the header.
Snapshot read_snapshot(const std::filesystem::path& stem);

}  // namespace vmfem
