#include "srflab/cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return srflab::run_cli(argc, argv, std::cout, std::cerr); }
