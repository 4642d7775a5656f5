#include <iostream>

#include "hmax/cli.hpp"

int main(int argc, char** argv) { return hmax::cli::run(argc, argv, std::cout, std::cerr); }
