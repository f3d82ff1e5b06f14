#include "structrag/cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return structrag::cli::run(argc, argv, std::cout, std::cerr); }
