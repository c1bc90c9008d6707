#pragma once

#include <cstdint>
#include <string>

#include "splitkin/grid_field.hpp"

namespace splitkin {

struct SnapshotMeta {
    double time = 0.0;
    std::int64_t sample = 0;
    std::uint64_t seed = 0;
};

/// Field snapshot: CSV with header `# grid N=<N> d=<d>`, one value per
/// line (17 significant digits), plus a JSON sidecar `<path>.json` with
/// the run metadata.
void write_field_csv(const std::string& path, const Field& f, const SnapshotMeta& meta);

Field read_field_csv(const std::string& path);
SnapshotMeta read_field_sidecar(const std::string& path);

/// All floating-point file output goes through this: shortest 17
/// significant digit form.
std::string format_double(double v);

}  // namespace splitkin
