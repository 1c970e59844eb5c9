#include <string>
#include <vector>

#include "ctproj/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return ctproj::run_command(args);
}
