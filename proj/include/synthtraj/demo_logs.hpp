#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "synthtraj/geometry.hpp"

namespace synthtraj {

/// Plausible vehicle logs from a simple kinematic model: 10 Hz, 60-200
/// points, speeds 2-14 m/s, smooth turns, occasional stops, centimetre noise.
/// Used when no recorded split is available (tests, demos).
std::vector<Trajectory> kinematic_logs(std::size_t count, std::uint64_t seed);

/// Writes kinematic_logs() as a text split readable by TextSplitAdapter.
void write_demo_split(const std::filesystem::path& dir, std::size_t count, std::uint64_t seed);

}  // namespace synthtraj
