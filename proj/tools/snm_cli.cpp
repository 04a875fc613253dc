#include <iostream>
#include <string>
#include <vector>

#include "snm/cli.hpp"

int main(int argc, char** argv) {
  const std::vector<std::string> args(argv, argv + argc);
  const snm::ParseOutcome parsed = snm::parse_args(args);
  if (!parsed.invocation) {
    (parsed.exit_code == 0 ? std::cout : std::cerr) << parsed.message;
    return parsed.exit_code;
  }
  return snm::run(*parsed.invocation, std::cout, std::cerr);
}
