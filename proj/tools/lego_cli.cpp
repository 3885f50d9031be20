#include <iostream>

#include "lego/cli_io.hpp"

int main(int argc, char** argv) { return lego::run_cli(argc, argv, std::cout, std::cerr); }
