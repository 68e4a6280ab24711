#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace harmonia {

/// 64-bit FNV-1a, used to name random sub-streams stably across platforms.
std::uint64_t fnv1a(std::string_view text) noexcept;

/// Independent generator for one named consumer of the run seed, so adding a
/// consumer never shifts another consumer's draws.
std::mt19937_64 substream(std::uint64_t seed, std::string_view name);

}  // namespace harmonia
