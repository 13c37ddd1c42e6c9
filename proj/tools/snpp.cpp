#include <iostream>

#include "snpp/cli.hpp"

int main(int argc, char** argv) { return snpp::cli::run_main(argc, argv, std::cout, std::cerr); }
