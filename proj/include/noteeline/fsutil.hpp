#pragma once

#include <filesystem>
#include <functional>
#include <string>
#include <string_view>

namespace noteeline::fsutil {

// Invoked after the temp file is fully written and synced, before rename.
// Throwing from it simulates a crash at that point.
using BeforeRenameHook = std::function<void(const std::filesystem::path& temp_path)>;

// Write to a sibling temp file, fsync, then rename over the target.
// Throws Error(IoError).
void write_file_atomic(const std::filesystem::path& target, std::string_view content,
                       const BeforeRenameHook& before_rename = {});

// Throws Error(NotFound) if missing, Error(IoError) on read failure.
std::string read_file(const std::filesystem::path& path);

}  // namespace noteeline::fsutil
