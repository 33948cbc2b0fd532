#ifndef UNVEILER_CLI_HPP_
#define UNVEILER_CLI_HPP_

#include <string>
#include <vector>

namespace unveiler::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitRuntime = 2;

// Subcommands: gen, demo, train-il, train-ppo, eval, oracle, render, replay.
// Returns 0 on success, 1 on usage errors, 2 on runtime errors.
int dispatch(int argc, char** argv);
// same, without the program name
int dispatch(const std::vector<std::string>& args);

}  // namespace unveiler::cli

#endif  // UNVEILER_CLI_HPP_
