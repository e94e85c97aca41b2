#include <iostream>

#include "memrec/cli.hpp"

int main(int argc, char** argv) { return memrec::run_cli(argc, argv, std::cout, std::cerr); }
