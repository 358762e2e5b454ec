#include <vector>
#include <string>

#include "hinet/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return hinet::cli_main(args);
}
