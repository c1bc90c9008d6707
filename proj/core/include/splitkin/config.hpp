#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "splitkin/model.hpp"
#include "splitkin/splitting.hpp"

namespace splitkin {

/// key = value configuration with [section] headers and '#' comments.
/// Keys are addressed as "section.key"; keys before any header have no
/// prefix. Repeated keys (noise modes) are kept in order.
class Config {
  public:
    static Config parse_file(const std::string& path);
    static Config parse_string(const std::string& text, const std::string& origin = "<string>");

    bool has(const std::string& key) const;
    std::string get_string(const std::string& key, const std::string& fallback) const;
    double get_double(const std::string& key, double fallback) const;
    std::int64_t get_int(const std::string& key, std::int64_t fallback) const;
    std::vector<double> get_double_list(const std::string& key) const;  // comma separated
    /// All values of a repeated key, in file order.
    std::vector<std::string> get_all(const std::string& key) const;
    /// Required variants throw ConfigError naming the key and line.
    std::string require_string(const std::string& key) const;
    double require_double(const std::string& key) const;

    const std::string& origin() const { return origin_; }

  private:
    struct Entry {
        std::string value;
        int line = 0;
    };
    std::string origin_;
    std::multimap<std::string, Entry> entries_;
    const Entry* find(const std::string& key) const;
    [[noreturn]] void fail(const std::string& key, const std::string& what) const;
};

/// Builds the problem from the registries: flux/diffusion selected by name
/// plus numeric parameters, noise modes as (shape, amplitude, wavenumber)
/// triples. A [problem] base = <builtin> starts from a stock problem.
ProblemSpec problem_from_config(const Config& cfg);

/// One registered noise shape: linear (amp * xi), sine
/// (amp sin(2 pi k x) xi / sqrt(1+xi^2)), additive-sine (amp sin(2 pi k x)).
ModeMap noise_mode_from_registry(const std::string& shape, double amplitude, int wavenumber);

/// Run options from the [grid]/[det]/[sde]/[split]/seed keys.
RunOptions run_options_from_config(const Config& cfg);

}  // namespace splitkin
