#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace gfusion::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 1;
inline constexpr int kExitData = 2;
inline constexpr int kExitNumeric = 3;

/// Entry point of the `gfusion` tool. Errors are reported on err and mapped
/// to exit codes.
int run(int argc, char** argv);
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

void simulate_command(const std::filesystem::path& scenario, std::uint64_t seed,
                      const std::filesystem::path& out_dir);
void fuse_command(const std::filesystem::path& config, const std::filesystem::path& out_dir);
/// Returns the printed table.
std::string evaluate_command(const std::filesystem::path& est, const std::filesystem::path& gt,
                             const std::vector<double>& rpe_lengths,
                             const std::filesystem::path& out_dir);
void plot_command(const std::filesystem::path& out,
                  const std::vector<std::filesystem::path>& trajectories);

}  // namespace gfusion::cli
