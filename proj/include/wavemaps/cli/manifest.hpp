#pragma once

#include "wavemaps/cli/config.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace wavemaps::cli {

/// Lower-case hex SHA-256 of a file's bytes.
std::string sha256_file(const std::filesystem::path& path);
std::string sha256_bytes(const std::string& bytes);

struct OutputFile {
    /// Path relative to the output directory.
    std::string path;
    std::string sha256;
};

struct RunManifest {
    std::string subcommand;
    ParameterSet config;
    std::string tool_version;
    double wall_time = 0.0;
    int workers = 1;
    int exit_status = 0;
    std::string message;
    std::vector<OutputFile> outputs;

    std::string to_json() const;
};

/// Writes result files into one directory and records their digests.
class OutputSink {
public:
    explicit OutputSink(std::filesystem::path dir);

    const std::filesystem::path& dir() const { return dir_; }

    /// Columns of equal length under a header line, 17 significant digits.
    void csv(const std::string& name, const std::vector<std::string>& headers,
             const std::vector<std::vector<double>>& columns);
    void text(const std::string& name, const std::string& content);

    const std::vector<OutputFile>& files() const { return files_; }

private:
    void record(const std::string& name);

    std::filesystem::path dir_;
    std::vector<OutputFile> files_;
};

/// Header line plus rows, 17 significant digits per value.
std::string format_csv(const std::vector<std::string>& headers, const std::vector<std::vector<double>>& columns);

}  // namespace wavemaps::cli
