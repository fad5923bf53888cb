#include <iostream>

#include "perorbit/cli.hpp"

int main(int argc, char** argv) { return perorbit::cli::run(argc, argv, std::cout, std::cerr); }
