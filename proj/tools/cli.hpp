#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace copsl::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitRunFailed = 1;
inline constexpr int kExitConfig = 2;

// Environment variable naming the default output directory for run/ablate.
inline constexpr const char* kOutDirEnv = "COPSL_OUT_DIR";

// Entry point shared by the executable and the tests. args excludes argv[0].
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

} // namespace copsl::cli
