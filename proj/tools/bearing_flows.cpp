#include <iostream>

#include "bearing_flows/cli.hpp"

int main(int argc, char** argv) {
  return bearing_flows::RunCli(argc, argv, std::cout, std::cerr);
}
