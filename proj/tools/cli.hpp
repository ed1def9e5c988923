#pragma once

namespace mpseg::cli {

// Exit codes: 0 success, 1 usage error, 2 data error, 3 plugin/protocol error.
inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitData = 2;
inline constexpr int kExitProtocol = 3;

int dispatch(int argc, char** argv);

}  // namespace mpseg::cli
