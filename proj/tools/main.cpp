#include <string>
#include <vector>

#include "kmdp_cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return kmdp::cli::run(args);
}
