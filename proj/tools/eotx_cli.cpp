#include <iostream>

#include "eotx/cli.hpp"

int main(int argc, char** argv) { return eotx::cli::run(argc, argv, std::cout, std::cerr); }
