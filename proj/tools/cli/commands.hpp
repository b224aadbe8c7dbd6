#pragma once

#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include <CLI11.hpp>

namespace difflab::cli {

struct Command {
  CLI::App* app;
  std::function<int()> action;
};

/// Adds every subcommand to `app`. The returned actions run after parsing;
/// `argv` is recorded verbatim in each manifest.
std::vector<Command> register_commands(CLI::App& app, const std::vector<std::string>& argv, std::ostream& out,
                                       std::ostream& err);

}  // namespace difflab::cli
