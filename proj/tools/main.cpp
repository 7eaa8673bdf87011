#include <iostream>

#include "eigengap/cli.hpp"

int main(int argc, char** argv) { return eigengap::cli::run(argc, argv, std::cout, std::cerr); }
