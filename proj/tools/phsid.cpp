#include <iostream>

#include "phsid_cli.hpp"

int main(int argc, char** argv) { return phsid::cli::run(argc, argv, std::cout, std::cerr); }
