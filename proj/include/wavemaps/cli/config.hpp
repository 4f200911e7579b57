#pragma once

#include "wavemaps/radial_core.hpp"

#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace wavemaps::cli {

/// Usage-level failure: bad key, bad value, missing key, malformed line.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class ParamType { Real, Integer, Text, Grid, RealList, Flag };

std::string to_string(ParamType type);

struct ParamSpec {
    std::string name;
    ParamType type = ParamType::Real;
    /// Absent default and required == false leaves the parameter unset.
    std::optional<std::string> default_value;
    bool required = false;
    /// Inclusive bounds for Real and Integer values.
    std::optional<Interval> bounds;
    /// Admissible values for Text parameters (empty: any).
    std::vector<std::string> choices;
    std::string help;
};

using Schema = std::vector<ParamSpec>;

/// One `key = value` line of a config file.
struct ConfigEntry {
    std::string key;
    std::string value;
    int line = 0;
    std::string text;
};

/// Flat `key = value` text, `#` starts a comment, blank lines ignored.
/// Throws ConfigError on malformed or duplicate lines.
std::vector<ConfigEntry> parse_config_text(const std::string& text);
std::vector<ConfigEntry> parse_config_file(const std::string& path);

enum class Provenance { Default, File, Flag };

std::string to_string(Provenance provenance);

struct ResolvedValue {
    std::string value;
    Provenance provenance = Provenance::Default;
    ParamType type = ParamType::Real;
};

/// Fully resolved parameter set with typed access.
class ParameterSet {
public:
    ParameterSet() = default;
    explicit ParameterSet(std::map<std::string, ResolvedValue> values) : values_(std::move(values)) {}

    bool has(const std::string& name) const;
    double real(const std::string& name) const;
    double real_or(const std::string& name, double fallback) const;
    int integer(const std::string& name) const;
    std::string text(const std::string& name) const;
    bool flag(const std::string& name) const;
    RadialGrid grid(const std::string& name) const;
    std::vector<double> reals(const std::string& name) const;
    const std::map<std::string, ResolvedValue>& values() const { return values_; }

private:
    const ResolvedValue& at(const std::string& name) const;
    std::map<std::string, ResolvedValue> values_;
};

/// Values are parsed strictly: the whole token must be consumed.
double parse_real(const std::string& text);
int parse_integer(const std::string& text);
bool parse_flag(const std::string& text);
/// "r_max,n_cells", e.g. "50,5000".
RadialGrid parse_grid(const std::string& text);
std::vector<double> parse_real_list(const std::string& text);

/// Defaults, then file entries, then flags (keyed by parameter name). Unknown
/// keys, type mismatches, out-of-range values and missing required keys raise
/// ConfigError naming the offending line or flag.
ParameterSet resolve(const Schema& schema, const std::vector<ConfigEntry>& file,
                     const std::map<std::string, std::string>& flags);

/// Command-line spelling of a parameter name: underscores become dashes.
std::string flag_name(const std::string& name);

}  // namespace wavemaps::cli
