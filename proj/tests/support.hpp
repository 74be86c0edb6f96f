#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <unistd.h>

#include "xrl/replay.hpp"

namespace xrl::testing {

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        static int counter = 0;
        path_ = std::filesystem::temp_directory_path() /
                ("xrl_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
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

/// One episode per record list, steps from 0, the last record done.
inline ReplaySet make_replay(std::vector<std::string> features,
                             const std::vector<std::vector<double>>& states,
                             const std::vector<ActionId>& actions,
                             std::vector<std::string> action_names) {
    ReplaySet rs;
    rs.schema.units.assign(features.size(), "");
    rs.schema.bounds.assign(features.size(), std::nullopt);
    rs.schema.names = std::move(features);
    rs.action_names = std::move(action_names);
    for (std::size_t i = 0; i < states.size(); ++i) {
        ReplayRecord r;
        r.episode = 0;
        r.step = static_cast<std::int64_t>(i);
        r.state = states[i];
        r.action = actions[i];
        r.reward = -1.0;
        r.done = i + 1 == states.size();
        rs.records.push_back(std::move(r));
    }
    return rs;
}

}  // namespace xrl::testing
