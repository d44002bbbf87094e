#include <iostream>

#include "psamp/cli.hpp"

int main(int argc, char** argv) {
  return psamp::run_cli(argc, argv, std::cout, std::cerr);
}
