#include <iostream>

#include "ldsc/cli.hpp"

int main(int argc, char** argv) { return ldsc::cli::run(argc, argv, std::cout, std::cerr); }
