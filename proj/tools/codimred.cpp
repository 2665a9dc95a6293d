#include "codimred/cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return codimred::cli::run_cli(argc, argv, std::cout, std::cerr); }
