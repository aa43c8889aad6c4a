#pragma once

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <unistd.h>

#include "overlap/overlap_engine.hpp"
#include "overlap/transcript.hpp"

namespace testing {

class TempDir {
public:
    TempDir() {
        std::string tmpl = (std::filesystem::temp_directory_path() / "overlap-test-XXXXXX").string();
        if (!::mkdtemp(tmpl.data())) {
            throw std::runtime_error("mkdtemp failed");
        }
        path_ = tmpl;
    }
    ~TempDir() {
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

inline overlap::Turn turn(const std::string& dialogue, std::size_t index, overlap::Channel channel, std::int64_t start,
                          std::int64_t end, std::string text = {}) {
    return overlap::Turn{dialogue, index, channel, start, end, std::move(text)};
}

inline constexpr auto agent = overlap::Channel::agent;
inline constexpr auto client = overlap::Channel::client;

/// Pair (K, K+1) as consecutive turns 0 and 1 of dialogue "d".
inline overlap::SwitchEvent pair_event(overlap::Channel ck, std::int64_t sk, std::int64_t ek, overlap::Channel ck1,
                                       std::int64_t sk1, std::int64_t ek1, const std::string& dialogue = "d",
                                       std::size_t k = 0) {
    return overlap::classify_switch(turn(dialogue, k, ck, sk, ek, "k"), turn(dialogue, k + 1, ck1, sk1, ek1, "k1"));
}

inline std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

}  // namespace testing
