#include "gaitcont/cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return gaitcont::run_cli(argc, argv, std::cout, std::cerr); }
