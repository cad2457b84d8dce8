#include <iostream>

#include "arm/app/cli.hpp"

int main(int argc, char** argv) { return arm::app::run_cli(argc, argv, std::cout, std::cerr); }
