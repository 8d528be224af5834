#include <iostream>

#include "tipcrit/cli.hpp"

int main(int argc, char** argv) { return tipcrit::run_cli(argc, argv, std::cout, std::cerr); }
