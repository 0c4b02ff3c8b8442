#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace coq::testing {

// Number of examples in synthetic20.jsonl and the seed they come from.
constexpr std::size_t kSyntheticFixtureSize = 20;
constexpr std::uint32_t kSyntheticFixtureSeed = 2024;

// Files written by write_fixtures, relative to its directory.
const std::vector<std::string>& fixture_files();

// Writes tables, datasets, rules and replay recordings made by running the
// simulator through the real pipeline. Output is byte-stable.
void write_fixtures(const std::filesystem::path& dir);

}  // namespace coq::testing
