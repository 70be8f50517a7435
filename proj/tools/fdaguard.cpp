#include <iostream>

#include "fdaguard/cli.hpp"

int main(int argc, char** argv) { return fdaguard::run_cli(argc, argv, std::cout, std::cerr); }
