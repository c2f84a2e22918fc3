#include <iostream>

#include "survsl/cli.hpp"

int main(int argc, char** argv) { return survsl::cli::run(argc, argv, std::cout, std::cerr); }
