#include <iostream>

#include "lcflow/cli.hpp"

int main(int argc, char** argv) { return lcflow::cli::main(argc, argv, std::cout, std::cerr); }
