#include "cli.hpp"

#include <cstdlib>
#include <ostream>

#include <CLI11.hpp>
#include <json.hpp>

#include <difflab/common.hpp>

#include "commands.hpp"

namespace difflab::cli {

std::string default_output_root() {
  const char* env = std::getenv("DIFFLAB_OUT");
  return env != nullptr && *env != '\0' ? env : "runs";
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"difflab: 2-D denoising diffusion lab", "difflab"};
  app.require_subcommand(1);
  std::vector<Command> commands;
  try {
    commands = register_commands(app, args, out, err);
    std::vector<std::string> storage{"difflab"};
    storage.insert(storage.end(), args.begin(), args.end());
    std::vector<char*> argv;
    for (auto& s : storage) argv.push_back(s.data());
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    // --help is a ParseError with exit code 0.
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsage;
  }

  try {
    for (const auto& c : commands) {
      if (c.app->parsed()) return c.action();
    }
    err << "no command given\n";
    return kUsage;
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\n";
    return kUsage;
  } catch (const std::out_of_range& e) {
    err << "usage error: " << e.what() << "\n";
    return kUsage;
  } catch (const InputMissingError& e) {
    err << "missing input: " << e.what() << "\n";
    return kInputMissing;
  } catch (const MismatchError& e) {
    err << "mismatch: " << e.what() << "\n";
    return kMismatch;
  } catch (const NumericError& e) {
    err << "numeric failure: " << e.what() << "\n";
    return kNumeric;
  } catch (const nlohmann::json::exception& e) {
    err << "malformed JSON input: " << e.what() << "\n";
    return kUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kFailure;
  }
}

}  // namespace difflab::cli
