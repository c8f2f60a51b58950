#include "subshrink/cli.hpp"

#include <iostream>

int main(int argc, char** argv) {
  return subshrink::run_cli(argc, argv, std::cout, std::cerr);
}
