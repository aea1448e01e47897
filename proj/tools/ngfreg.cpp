#include <iostream>

#include "ngfreg/cli.hpp"

int main(int argc, char **argv) { return ngfreg::run_cli(argc, argv, std::cout, std::cerr); }
