#pragma once

#include <chrono>
#include <filesystem>
#include <string>

namespace mpseg::detail {

struct ProcessResult {
  int exit_code = -1;
  bool timed_out = false;
  std::string stderr_text;
};

// Runs `command` through /bin/sh in its own process group with stdout and
// stderr captured under `log_dir`. The group is killed on timeout.
ProcessResult run_shell(const std::string& command, std::chrono::milliseconds timeout,
                        const std::filesystem::path& log_dir);

std::string shell_quote(const std::string& text);

}  // namespace mpseg::detail
