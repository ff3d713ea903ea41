#include "xssguard/cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return xssguard::cli::run(argc, argv, std::cout, std::cerr); }
