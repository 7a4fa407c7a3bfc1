#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

namespace bilop::cli {

/// Runs one subcommand. args excludes the program name. Returns the process
/// exit code: 0 on a passing or purely descriptive verdict, 2 on a failing
/// verdict, 1 on errors.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Verdicts that map to exit code 2.
bool is_failing_verdict(const std::string& verdict);

/// Names of every subcommand, in the order --help lists them.
std::vector<std::string> subcommands();

/// Resolves the settings of a subcommand from a JSON config document alone
/// (no flags), applying defaults. Throws InvalidInput on unknown keys or
/// wrongly typed values, naming the JSON path.
nlohmann::json resolve_config(const std::string& subcommand, const nlohmann::json& config);

} // namespace bilop::cli
