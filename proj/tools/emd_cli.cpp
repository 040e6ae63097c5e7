#include <iostream>

#include "emd/cli.hpp"

int main(int argc, char** argv) { return emd::cli::run(argc, argv, std::cout, std::cerr); }
