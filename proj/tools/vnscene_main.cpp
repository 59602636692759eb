#include <iostream>

#include "vnscene/cli.hpp"

int main(int argc, char** argv) { return vnscene::cli::run(argc, argv, std::cout, std::cerr); }
