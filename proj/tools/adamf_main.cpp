#include <iostream>

#include "adamf/cli.hpp"

int main(int argc, char** argv) { return adamf::run_cli(argc, argv, std::cout, std::cerr); }
