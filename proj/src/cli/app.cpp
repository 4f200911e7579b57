#include "wavemaps/cli/app.hpp"

#include "commands.hpp"
#include "wavemaps/errors.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <map>
#include <memory>
#include <ostream>

namespace wavemaps::cli {

namespace {

const Command* find_command(const std::string& name) {
    for (const Command& c : commands()) {
        if (c.name == name) return &c;
    }
    return nullptr;
}

std::filesystem::path default_out_dir() {
    const char* env = std::getenv("WAVEMAPS_OUT_DIR");
    return env && *env ? std::filesystem::path(env) : std::filesystem::path("wavemaps_out");
}

void write_manifest(const std::filesystem::path& dir, const RunManifest& m, std::ostream& err) {
    try {
        std::filesystem::create_directories(dir);
        std::ofstream out(dir / "manifest.json", std::ios::binary);
        out << m.to_json();
    } catch (const std::exception& e) {
        err << "error: cannot write manifest: " << e.what() << "\n";
    }
}

}  // namespace

const std::vector<std::string>& subcommand_names() {
    static const std::vector<std::string> names = [] {
        std::vector<std::string> v;
        for (const Command& c : commands()) v.push_back(c.name);
        return v;
    }();
    return names;
}

Schema subcommand_schema(const std::string& name) {
    const Command* c = find_command(name);
    if (!c) throw ConfigError("unknown subcommand '" + name + "'");
    return c->schema;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    const auto start = std::chrono::steady_clock::now();
    CLI::App app{"Equivariant wave maps into S^3: self-similar solutions, spectra and critical collapse", "wavemaps"};
    app.require_subcommand(1, 1);
    app.set_version_flag("--version", kToolVersion);
    std::string out_dir, config_path;
    std::map<std::string, std::map<std::string, std::string>> flag_values;
    std::map<std::string, std::vector<std::pair<std::string, CLI::Option*>>> flag_options;
    for (const Command& c : commands()) {
        CLI::App* sub = app.add_subcommand(c.name, c.description);
        sub->add_option("--out", out_dir, "output directory (default: $WAVEMAPS_OUT_DIR or ./wavemaps_out)");
        sub->add_option("--config", config_path, "flat key = value config file");
        auto& values = flag_values[c.name];
        for (const ParamSpec& p : c.schema) {
            std::string help = p.help + " [" + to_string(p.type);
            if (p.default_value) help += ", default " + *p.default_value;
            if (p.required) help += ", required";
            help += "]";
            flag_options[c.name].emplace_back(p.name, sub->add_option("--" + flag_name(p.name), values[p.name], help));
        }
    }

    RunManifest manifest;
    manifest.tool_version = kToolVersion;
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e, out, err);
    } catch (const CLI::ParseError& e) {
        std::string what = e.what();
        if (!args.empty() && args.front().rfind("-", 0) != 0 && !find_command(args.front())) {
            what = "unknown subcommand '" + args.front() + "'";
        }
        err << "usage error: " << what << "\n";
        manifest.exit_status = kExitUsage;
        manifest.message = what;
        if (!app.get_subcommands().empty()) manifest.subcommand = app.get_subcommands().front()->get_name();
        for (std::size_t i = 0; out_dir.empty() && i < args.size(); ++i) {
            if (args[i] == "--out" && i + 1 < args.size()) out_dir = args[i + 1];
            if (args[i].rfind("--out=", 0) == 0) out_dir = args[i].substr(6);
        }
        write_manifest(out_dir.empty() ? default_out_dir() : std::filesystem::path(out_dir), manifest, err);
        return kExitUsage;
    }

    const Command& cmd = *find_command(app.get_subcommands().front()->get_name());
    manifest.subcommand = cmd.name;
    const std::filesystem::path dir = out_dir.empty() ? default_out_dir() : std::filesystem::path(out_dir);
    std::unique_ptr<OutputSink> sink;
    int status = kExitSuccess;
    try {
        std::map<std::string, std::string> flags;
        for (const auto& [name, opt] : flag_options[cmd.name]) {
            if (opt->count() > 0) flags[name] = flag_values[cmd.name][name];
        }
        const std::vector<ConfigEntry> file = config_path.empty() ? std::vector<ConfigEntry>{}
                                                                  : parse_config_file(config_path);
        manifest.config = resolve(cmd.schema, file, flags);
        sink = std::make_unique<OutputSink>(dir);
        Context ctx{manifest.config, *sink, out};
        cmd.action(ctx);
        manifest.message = "ok";
    } catch (const ConfigError& e) {
        status = kExitUsage;
        manifest.message = e.what();
        err << "usage error: " << e.what() << "\n";
    } catch (const std::invalid_argument& e) {
        status = kExitUsage;
        manifest.message = e.what();
        err << "usage error: " << e.what() << "\n";
    } catch (const NumericalError& e) {
        status = kExitScientific;
        manifest.message = e.what();
        err << "error: " << e.what() << "\n";
    } catch (const std::exception& e) {
        status = kExitScientific;
        manifest.message = e.what();
        err << "error: " << e.what() << "\n";
    }
    manifest.exit_status = status;
    if (sink) manifest.outputs = sink->files();
    manifest.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    write_manifest(dir, manifest, err);
    return status;
}

}  // namespace wavemaps::cli
