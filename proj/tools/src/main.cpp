#include <iostream>

#include "renyiqkd/cli/commands.hpp"

int main(int argc, char** argv) {
  return renyiqkd::cli::run_main(argc, argv, std::cout, std::cerr);
}
