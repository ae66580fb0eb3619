#include <iostream>

#include "synpa/cli.hpp"

int main(int argc, char** argv) { return synpa::run_cli(argc, argv, std::cout, std::cerr); }
