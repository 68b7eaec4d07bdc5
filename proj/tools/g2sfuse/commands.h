#pragma once

namespace g2sfuse {

enum ExitCode : int {
  kExitOk = 0,
  kExitUsage = 1,
  kExitData = 2,
  kExitSolver = 3,
};

/// Parses argv, runs one subcommand and maps failures onto ExitCode.
int dispatch(int argc, char** argv);

}  // namespace g2sfuse
