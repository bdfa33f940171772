#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

namespace jobswitch {

/// Hex SHA-256 of a file's bytes.
std::string sha256_file(const std::filesystem::path& p);

/// Per-run record: config echo, derived constants, stages, output inventory with hashes.
class RunManifest {
public:
    RunManifest(std::string command, std::filesystem::path dir);

    const std::filesystem::path& dir() const { return dir_; }
    std::filesystem::path path(const std::string& name) const { return dir_ / name; }

    void set_config(const nlohmann::json& config) { doc_["config"] = config; }
    void set_derived(const nlohmann::json& derived) { doc_["derived"] = derived; }
    /// Records a finished stage with its tolerances, residuals and timing.
    void add_stage(const std::string& name, double seconds, nlohmann::json info = nlohmann::json::object());
    /// Registers an output file written into the run directory.
    void add_file(const std::string& name);
    void fail(const std::string& stage, const std::string& message, int exit_code);

    /// Hashes every registered file and writes manifest.json.
    void write();

private:
    std::filesystem::path dir_;
    nlohmann::json doc_;
};

}  // namespace jobswitch
