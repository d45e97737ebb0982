#pragma once

#include "stakenli/core.hpp"
#include "stakenli/ingest.hpp"

#include <atomic>
#include <filesystem>
#include <random>
#include <string>
#include <unistd.h>

namespace testing_support {

inline std::filesystem::path data_dir() { return STAKENLI_DATA_DIR; }
inline std::filesystem::path fixtures_dir() { return STAKENLI_FIXTURES_DIR; }

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
    TempDir()
    {
        static std::atomic<int> counter{0};
        path_ = std::filesystem::temp_directory_path() /
                ("stakenli-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~TempDir()
    {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

inline stakenli::LabeledExample example(std::string phrase, std::string label, std::string topic,
                                        std::string text = "Some context.")
{
    stakenli::LabeledExample ex;
    ex.id = phrase;
    ex.entity_phrase = phrase;
    ex.label = std::move(label);
    ex.topic = std::move(topic);
    ex.description = stakenli::make_description(std::move(phrase), std::nullopt, {{"d1", 0, std::move(text)}});
    return ex;
}

inline stakenli::LabelRegistry shipped_registry() { return stakenli::load_label_registry(data_dir() / "stakeholders.json"); }

}  // namespace testing_support
