#pragma once

#include "stakenli/core.hpp"
#include "stakenli/json_io.hpp"
#include "stakenli/knowledge.hpp"

#include <openssl/evp.h>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace stakenli {

inline constexpr std::string_view tool_version = "0.1.0";

inline std::string sha256_hex(std::string_view data)
{
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1)
        throw input_error("sha256 digest failed");
    static constexpr char hex[] = "0123456789abcdef";
    std::string out;
    for (unsigned int i = 0; i < len; ++i) {
        out += hex[digest[i] >> 4];
        out += hex[digest[i] & 0xF];
    }
    return out;
}

/// Provenance record written next to every command output.
struct RunManifest {
    explicit RunManifest(std::string cmd) : command(std::move(cmd)), started_at(knowledge::utc_timestamp()) {}

    std::string command;
    json config = json::object();
    std::vector<std::pair<std::string, std::string>> inputs;  ///< path, sha256
    std::optional<std::uint64_t> seed;
    std::string started_at;
    std::string finished_at;

    void add_input(const std::filesystem::path& path)
    {
        inputs.emplace_back(path.string(), sha256_hex(io::read_file(path)));
    }

    ordered_json to_json() const
    {
        ordered_json in = ordered_json::array();
        for (const auto& [path, digest] : inputs) in.push_back({{"path", path}, {"sha256", digest}});
        ordered_json j{{"tool", "stakenli"}, {"version", tool_version}, {"command", command},
                       {"config", ordered_json::parse(config.dump())},   {"inputs", std::move(in)}};
        j["seed"] = seed ? ordered_json(*seed) : ordered_json(nullptr);
        j["started_at"] = started_at;
        j["finished_at"] = finished_at;
        return j;
    }

    /// Writes `<output>.manifest.json`.
    void write_for(const std::filesystem::path& output)
    {
        if (finished_at.empty()) finished_at = knowledge::utc_timestamp();
        auto path = output;
        path += ".manifest.json";
        io::write_file_atomic(path, to_json().dump(2) + "\n");
    }
};

}  // namespace stakenli
