#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>

#include "uniedge/params.hpp"

namespace uniedge {

// Flat binary checkpoint, all integers and reals 64-bit little-endian:
//   magic "UNIEDGE\0" | u64 version | u64 count |
//   count x ( u64 name_len | name bytes | u64 rank | rank x u64 extent | f64 values... )
// Parameters appear in declaration order.
inline constexpr char kCheckpointMagic[8] = {'U', 'N', 'I', 'E', 'D', 'G', 'E', '\0'};
inline constexpr std::uint64_t kCheckpointVersion = 1;

void write_checkpoint(std::ostream& out, const ParameterStore& params);
ParameterStore read_checkpoint(std::istream& in);

// Writes to a temporary sibling and renames, so an interrupted write never
// replaces the previous checkpoint.
void save_checkpoint(const std::filesystem::path& path, const ParameterStore& params);

// Loads values into an already-declared store. Names, order and shapes must
// match. Throws MissingCheckpoint when the file does not exist.
void load_checkpoint(const std::filesystem::path& path, ParameterStore& params);

}  // namespace uniedge
