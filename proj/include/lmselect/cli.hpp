#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "json.hpp"

namespace lmselect::cli {

enum ExitCode : int {
  kOk = 0,
  kUsage = 2,
  kData = 3,
  kNumerical = 4,
};

/// Provenance record written next to every command's outputs.
struct RunManifest {
  std::string command;
  nlohmann::json config;
  std::string version;
  std::uint64_t seed = 0;
  std::string started;
  std::string finished;
  std::vector<std::string> outputs;

  nlohmann::json to_json() const;
};

std::string version();

/// Runs one command line (argv[0] is the program name). Normal output goes to
/// `out`, diagnostics to `err`. Returns one of the ExitCode values.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run(int argc, const char* const* argv);

}  // namespace lmselect::cli
