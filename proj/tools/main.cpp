#include <iostream>

#include "repcrash/cli.hpp"

int main(int argc, char** argv) {
  return repcrash::run_cli(argc, argv, std::cout, std::cerr);
}
