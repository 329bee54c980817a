#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "uniedge/config.hpp"
#include "uniedge/dataio.hpp"

namespace uniedge {

// Exit codes of `run`.
inline constexpr int kExitOk = 0;
inline constexpr int kExitCheckFailed = 1;  // gradcheck above tolerance
inline constexpr int kExitError = 2;        // bad config, missing checkpoint, non-finite gradient, ...

// Entry point of the command-line tool; argv[0] is the program name.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

// A file, or every *.txt file below a directory (sorted by path).
std::vector<TrajectoryScene> load_scenes(const std::filesystem::path& path);

// Windows of every scene, re-indexed consecutively.
std::vector<Window> windows_of(const std::vector<TrajectoryScene>& scenes, const WindowSpec& spec);

// True when `subset` names a path component or file stem of the scene.
bool scene_in_subset(const std::string& scene_name, const std::string& subset);

}  // namespace uniedge
