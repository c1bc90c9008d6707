#include "splitkin/snapshot_io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace splitkin {

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void write_field_csv(const std::string& path, const Field& f, const SnapshotMeta& meta) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write field snapshot '" + path + "'");
    out << "# grid N=" << f.grid().cells_per_axis << " d=" << f.grid().dimension << "\n";
    for (double v : f.values()) out << format_double(v) << "\n";
    out.close();

    nlohmann::json side;
    side["time"] = meta.time;
    side["sample"] = meta.sample;
    side["seed"] = meta.seed;
    std::ofstream js(path + ".json");
    if (!js) throw Error("cannot write field sidecar '" + path + ".json'");
    js << side.dump(2) << "\n";
}

Field read_field_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot read field snapshot '" + path + "'");
    std::string header;
    std::getline(in, header);
    int n = 0, d = 0;
    if (std::sscanf(header.c_str(), "# grid N=%d d=%d", &n, &d) != 2)
        throw Error("bad field snapshot header in '" + path + "'");
    std::vector<double> values;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        values.push_back(std::stod(line));
    }
    return Field(TorusGrid(d, n), std::move(values));
}

SnapshotMeta read_field_sidecar(const std::string& path) {
    std::ifstream js(path + ".json");
    if (!js) throw Error("cannot read field sidecar '" + path + ".json'");
    nlohmann::json side;
    js >> side;
    SnapshotMeta meta;
    meta.time = side.value("time", 0.0);
    meta.sample = side.value("sample", std::int64_t{0});
    meta.seed = side.value("seed", std::uint64_t{0});
    return meta;
}

}  // namespace splitkin
