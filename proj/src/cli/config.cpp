#include "wavemaps/cli/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace wavemaps::cli {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string item;
    std::istringstream in(s);
    while (std::getline(in, item, sep)) out.push_back(trim(item));
    if (!s.empty() && s.back() == sep) out.emplace_back();
    return out;
}

void check_value(const ParamSpec& spec, const std::string& value) {
    switch (spec.type) {
        case ParamType::Real: {
            const double v = parse_real(value);
            if (spec.bounds && !spec.bounds->contains(v)) {
                std::ostringstream msg;
                msg << "value " << value << " outside [" << spec.bounds->lo << ", " << spec.bounds->hi << "]";
                throw std::invalid_argument(msg.str());
            }
            break;
        }
        case ParamType::Integer: {
            const int v = parse_integer(value);
            if (spec.bounds && !spec.bounds->contains(v)) {
                std::ostringstream msg;
                msg << "value " << value << " outside [" << spec.bounds->lo << ", " << spec.bounds->hi << "]";
                throw std::invalid_argument(msg.str());
            }
            break;
        }
        case ParamType::Text:
            if (value.empty()) throw std::invalid_argument("empty value");
            if (!spec.choices.empty() &&
                std::find(spec.choices.begin(), spec.choices.end(), value) == spec.choices.end()) {
                std::string list;
                for (const std::string& c : spec.choices) list += (list.empty() ? "" : ", ") + c;
                throw std::invalid_argument("value " + value + " not one of {" + list + "}");
            }
            break;
        case ParamType::Grid: parse_grid(value); break;
        case ParamType::RealList: parse_real_list(value); break;
        case ParamType::Flag: parse_flag(value); break;
    }
}

}  // namespace

std::string to_string(ParamType type) {
    switch (type) {
        case ParamType::Real: return "real";
        case ParamType::Integer: return "integer";
        case ParamType::Text: return "text";
        case ParamType::Grid: return "grid";
        case ParamType::RealList: return "real list";
        case ParamType::Flag: return "flag";
    }
    return "unknown";
}

std::string to_string(Provenance provenance) {
    switch (provenance) {
        case Provenance::Default: return "default";
        case Provenance::File: return "file";
        case Provenance::Flag: return "flag";
    }
    return "unknown";
}

std::vector<ConfigEntry> parse_config_text(const std::string& text) {
    std::vector<ConfigEntry> out;
    std::set<std::string> seen;
    std::istringstream in(text);
    std::string raw;
    int line = 0;
    while (std::getline(in, raw)) {
        ++line;
        std::string body = raw.substr(0, raw.find('#'));
        body = trim(body);
        if (body.empty()) continue;
        const auto eq = body.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("line " + std::to_string(line) + ": expected key = value: " + trim(raw));
        }
        ConfigEntry e{trim(body.substr(0, eq)), trim(body.substr(eq + 1)), line, trim(raw)};
        if (e.key.empty()) throw ConfigError("line " + std::to_string(line) + ": empty key: " + e.text);
        if (e.value.empty()) throw ConfigError("line " + std::to_string(line) + ": empty value: " + e.text);
        if (!seen.insert(e.key).second) {
            throw ConfigError("line " + std::to_string(line) + ": duplicate key '" + e.key + "': " + e.text);
        }
        out.push_back(std::move(e));
    }
    return out;
}

std::vector<ConfigEntry> parse_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config file " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config_text(buf.str());
}

double parse_real(const std::string& text) {
    const std::string t = trim(text);
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (t.empty() || ec != std::errc{} || ptr != t.data() + t.size() || !std::isfinite(v)) {
        throw std::invalid_argument("expected a real number, got '" + text + "'");
    }
    return v;
}

int parse_integer(const std::string& text) {
    const std::string t = trim(text);
    int v = 0;
    const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (t.empty() || ec != std::errc{} || ptr != t.data() + t.size()) {
        throw std::invalid_argument("expected an integer, got '" + text + "'");
    }
    return v;
}

bool parse_flag(const std::string& text) {
    const std::string t = trim(text);
    if (t == "true" || t == "1" || t == "yes" || t == "on") return true;
    if (t == "false" || t == "0" || t == "no" || t == "off") return false;
    throw std::invalid_argument("expected true or false, got '" + text + "'");
}

RadialGrid parse_grid(const std::string& text) {
    const std::vector<std::string> parts = split(text, ',');
    if (parts.size() != 2) throw std::invalid_argument("expected r_max,n_cells, got '" + text + "'");
    return make_uniform_grid(parse_real(parts[0]), parse_integer(parts[1]));
}

std::vector<double> parse_real_list(const std::string& text) {
    std::vector<double> out;
    for (const std::string& p : split(text, ',')) out.push_back(parse_real(p));
    return out;
}

ParameterSet resolve(const Schema& schema, const std::vector<ConfigEntry>& file,
                     const std::map<std::string, std::string>& flags) {
    std::map<std::string, const ParamSpec*> by_name;
    for (const ParamSpec& p : schema) by_name[p.name] = &p;
    std::map<std::string, ResolvedValue> values;
    for (const ParamSpec& p : schema) {
        if (p.default_value) values[p.name] = {*p.default_value, Provenance::Default, p.type};
    }
    for (const ConfigEntry& e : file) {
        const auto it = by_name.find(e.key);
        if (it == by_name.end()) {
            throw ConfigError("line " + std::to_string(e.line) + ": unknown key '" + e.key + "': " + e.text);
        }
        try {
            check_value(*it->second, e.value);
        } catch (const std::invalid_argument& ex) {
            throw ConfigError("line " + std::to_string(e.line) + ": " + e.key + " (" + to_string(it->second->type) +
                              "): " + ex.what() + ": " + e.text);
        }
        values[e.key] = {e.value, Provenance::File, it->second->type};
    }
    for (const auto& [name, value] : flags) {
        const auto it = by_name.find(name);
        if (it == by_name.end()) throw ConfigError("unknown flag --" + flag_name(name));
        try {
            check_value(*it->second, value);
        } catch (const std::invalid_argument& ex) {
            throw ConfigError("flag --" + flag_name(name) + " (" + to_string(it->second->type) + "): " + ex.what());
        }
        values[name] = {value, Provenance::Flag, it->second->type};
    }
    for (const ParamSpec& p : schema) {
        if (p.required && !values.count(p.name)) {
            throw ConfigError("missing required key '" + p.name + "' (flag --" + flag_name(p.name) + ")");
        }
    }
    return ParameterSet(std::move(values));
}

std::string flag_name(const std::string& name) {
    std::string out = name;
    std::replace(out.begin(), out.end(), '_', '-');
    return out;
}

bool ParameterSet::has(const std::string& name) const { return values_.count(name) > 0; }

const ResolvedValue& ParameterSet::at(const std::string& name) const {
    const auto it = values_.find(name);
    if (it == values_.end()) throw ConfigError("parameter '" + name + "' is not set");
    return it->second;
}

double ParameterSet::real(const std::string& name) const { return parse_real(at(name).value); }

double ParameterSet::real_or(const std::string& name, double fallback) const {
    return has(name) ? real(name) : fallback;
}

int ParameterSet::integer(const std::string& name) const { return parse_integer(at(name).value); }

std::string ParameterSet::text(const std::string& name) const { return at(name).value; }

bool ParameterSet::flag(const std::string& name) const { return parse_flag(at(name).value); }

RadialGrid ParameterSet::grid(const std::string& name) const { return parse_grid(at(name).value); }

std::vector<double> ParameterSet::reals(const std::string& name) const { return parse_real_list(at(name).value); }

}  // namespace wavemaps::cli
