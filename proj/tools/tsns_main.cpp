#include <iostream>
#include <string>
#include <vector>

#include <tsns/cli.hpp>

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return tsns::run_cli(std::move(args), std::cout, std::cerr);
}
