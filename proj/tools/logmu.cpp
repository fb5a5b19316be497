#include <iostream>

#include "logmu/cli.hpp"

int main(int argc, char** argv) { return logmu::cli::main(argc, argv, std::cout, std::cerr); }
