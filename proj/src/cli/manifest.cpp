#include "wavemaps/cli/manifest.hpp"

#include <json.hpp>
#include <openssl/evp.h>

#include <array>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>

namespace wavemaps::cli {

namespace {

std::string hex(const unsigned char* data, unsigned int n) {
    std::ostringstream out;
    for (unsigned int i = 0; i < n; ++i) out << std::hex << std::setw(2) << std::setfill('0') << int(data[i]);
    return out.str();
}

}  // namespace

std::string sha256_bytes(const std::string& bytes) {
    std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
    unsigned int n = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), md.data(), &n, EVP_sha256(), nullptr) != 1) {
        throw std::runtime_error("SHA-256 failed");
    }
    return hex(md.data(), n);
}

std::string sha256_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return sha256_bytes(buf.str());
}

std::string RunManifest::to_json() const {
    nlohmann::ordered_json j;
    j["subcommand"] = subcommand;
    j["tool_version"] = tool_version;
    nlohmann::ordered_json cfg = nlohmann::ordered_json::object();
    for (const auto& [name, v] : config.values()) {
        cfg[name] = {{"value", v.value}, {"type", to_string(v.type)}, {"provenance", to_string(v.provenance)}};
    }
    j["config_snapshot"] = cfg;
    j["wall_time_seconds"] = wall_time;
    j["workers"] = workers;
    j["exit_status"] = exit_status;
    j["message"] = message;
    nlohmann::ordered_json outs = nlohmann::ordered_json::array();
    for (const OutputFile& f : outputs) outs.push_back({{"path", f.path}, {"sha256", f.sha256}});
    j["outputs"] = outs;
    return j.dump(2) + "\n";
}

std::string format_csv(const std::vector<std::string>& headers, const std::vector<std::vector<double>>& columns) {
    if (headers.size() != columns.size()) throw std::invalid_argument("csv: header and column counts differ");
    const std::size_t rows = columns.empty() ? 0 : columns.front().size();
    for (const auto& c : columns) {
        if (c.size() != rows) throw std::invalid_argument("csv: columns differ in length");
    }
    std::ostringstream out;
    out << std::setprecision(17);
    for (std::size_t k = 0; k < headers.size(); ++k) out << (k ? "," : "") << headers[k];
    out << "\n";
    for (std::size_t i = 0; i < rows; ++i) {
        for (std::size_t k = 0; k < columns.size(); ++k) out << (k ? "," : "") << columns[k][i];
        out << "\n";
    }
    return out.str();
}

OutputSink::OutputSink(std::filesystem::path dir) : dir_(std::move(dir)) {
    std::filesystem::create_directories(dir_);
}

void OutputSink::csv(const std::string& name, const std::vector<std::string>& headers,
                     const std::vector<std::vector<double>>& columns) {
    text(name, format_csv(headers, columns));
}

void OutputSink::text(const std::string& name, const std::string& content) {
    const std::filesystem::path p = dir_ / name;
    if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
    std::ofstream out(p, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + p.string());
    out << content;
    out.close();
    record(name);
}

void OutputSink::record(const std::string& name) {
    const std::string digest = sha256_file(dir_ / name);
    for (OutputFile& f : files_) {
        if (f.path == name) {
            f.sha256 = digest;
            return;
        }
    }
    files_.push_back({name, digest});
}

}  // namespace wavemaps::cli
