#include <iostream>

#include "mhfx/cli.hpp"

int main(int argc, char** argv) { return mhfx::cli::run(argc, argv, std::cout, std::cerr); }
