#pragma once

#include "wavemaps/cli/config.hpp"
#include "wavemaps/cli/manifest.hpp"
#include "wavemaps/criticality.hpp"

#include <json.hpp>

#include <functional>
#include <iosfwd>
#include <string>

namespace wavemaps::cli {

struct Context {
    const ParameterSet& params;
    OutputSink& sink;
    std::ostream& out;
};

struct Command {
    std::string name;
    std::string description;
    Schema schema;
    std::function<void(Context&)> action;
};

const std::vector<Command>& commands();

Schema data_schema(const std::string& family, const std::string& amplitude);
Schema evolution_schema(const std::string& grid, const std::string& t_end);
InitialDataSpec data_from(const ParameterSet& p, double r_max);
EvolutionConfig evolution_from(const ParameterSet& p);

nlohmann::ordered_json data_to_json(const InitialDataSpec& spec);
InitialDataSpec data_from_json(const nlohmann::json& j, double r_max);
nlohmann::ordered_json evolution_to_json(const EvolutionConfig& cfg);
EvolutionConfig evolution_from_json(const nlohmann::json& j);
nlohmann::ordered_json record_to_json(const BisectionRecord& record, const FamilySpec& family,
                                      const EvolutionConfig& cfg);

/// Bisection record together with the family and evolution settings it was made with.
struct StoredRecord {
    BisectionRecord record;
    FamilySpec family;
    EvolutionConfig evolution;
};

StoredRecord load_record(const std::string& path);
void write_record(OutputSink& sink, const std::string& name, const BisectionRecord& record, const FamilySpec& family,
                  const EvolutionConfig& cfg);

Schema figure_schema();
void figdata(Context& ctx);

/// Schema concatenation.
Schema operator+(Schema a, const Schema& b);

}  // namespace wavemaps::cli
