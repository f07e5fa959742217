#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "reslab/potential.hpp"

namespace reslab::cli {

using json = nlohmann::json;

inline constexpr const char* toolkit_name = "reslab";
inline constexpr const char* toolkit_version = "0.1.0";

enum ExitCode : int { ok = 0, usage = 1, inconclusive = 2, inconsistent = 3 };

/// 64-bit FNV-1a of the bytes, as 16 hex digits.
std::string fnv1a_hex(const std::string& bytes);
/// Hash of the canonical (key-sorted, compact) dump.
std::string config_hash(const json& config);

/// Parses a config file; ConfigError on I/O or syntax problems.
json load_config(const std::filesystem::path& path);

/// Potential declaration {kind, params...}. Relative tabulated paths resolve against base_dir.
ChannelPotential parse_potential(const json& decl, const std::filesystem::path& base_dir = {});
/// "kind:a,b,c" shorthand, e.g. exponential:1.0 or square_well:2.4674,1.0.
json potential_shorthand(const std::string& text);

/// Rejects keys outside `allowed`.
void check_keys(const json& obj, const std::vector<std::string>& allowed, const std::string& where);

std::vector<std::string> commands();

/// Runs a subcommand, writing reports into out_dir. Returns the exit code.
int run_command(const std::string& command, const json& config, const std::filesystem::path& out_dir,
                std::ostream& log, const std::filesystem::path& base_dir = {});

} // namespace reslab::cli
