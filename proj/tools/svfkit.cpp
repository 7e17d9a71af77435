#include "svfkit/cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return svfkit::cli::main(argc, argv, std::cout, std::cerr); }
