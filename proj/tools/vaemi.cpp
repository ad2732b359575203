#include <iostream>

#include "vaemi/cli.hpp"

int main(int argc, char** argv) { return vaemi::cli::run(argc, argv, std::cout, std::cerr); }
