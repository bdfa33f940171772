#include "jobswitch/manifest.hpp"

#include <openssl/evp.h>

#include <array>
#include <fstream>
#include <memory>
#include <stdexcept>

namespace jobswitch {

std::string sha256_file(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + p.string());
    std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
    if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1)
        throw std::runtime_error("sha256 init failed");
    std::array<char, 1 << 16> buf;
    while (in) {
        in.read(buf.data(), buf.size());
        if (in.gcount() > 0) EVP_DigestUpdate(ctx.get(), buf.data(), static_cast<std::size_t>(in.gcount()));
    }
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_DigestFinal_ex(ctx.get(), md, &len);
    static const char* hex = "0123456789abcdef";
    std::string out;
    for (unsigned int i = 0; i < len; ++i) {
        out += hex[md[i] >> 4];
        out += hex[md[i] & 15];
    }
    return out;
}

RunManifest::RunManifest(std::string command, std::filesystem::path dir) : dir_(std::move(dir)) {
    std::filesystem::create_directories(dir_);
    doc_["command"] = std::move(command);
    doc_["status"] = "ok";
    doc_["exit_code"] = 0;
    doc_["stages"] = nlohmann::json::array();
    doc_["files"] = nlohmann::json::array();
}

void RunManifest::add_stage(const std::string& name, double seconds, nlohmann::json info) {
    info["name"] = name;
    info["seconds"] = seconds;
    doc_["stages"].push_back(std::move(info));
}

void RunManifest::add_file(const std::string& name) { doc_["files"].push_back({{"name", name}}); }

void RunManifest::fail(const std::string& stage, const std::string& message, int exit_code) {
    doc_["status"] = "failed";
    doc_["failure"] = {{"stage", stage}, {"message", message}};
    doc_["exit_code"] = exit_code;
}

void RunManifest::write() {
    for (auto& f : doc_["files"]) {
        const auto p = dir_ / f["name"].get<std::string>();
        if (std::filesystem::exists(p)) {
            f["sha256"] = sha256_file(p);
            f["bytes"] = std::filesystem::file_size(p);
        } else {
            f["missing"] = true;
        }
    }
    std::ofstream out(dir_ / "manifest.json");
    out << doc_.dump(2) << '\n';
}

}  // namespace jobswitch
