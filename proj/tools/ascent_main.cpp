#include <iostream>

#include "ascent/cli.hpp"

int main(int argc, char** argv) { return ascent::cli::main(argc, argv, std::cout, std::cerr); }
