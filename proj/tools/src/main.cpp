#include <iostream>

#include "mpa/cli/commands.hpp"

int main(int argc, char** argv) { return mpa::cli::run(argc, argv, std::cout, std::cerr); }
