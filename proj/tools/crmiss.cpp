#include <iostream>

#include "crmiss/cli.hpp"

int main(int argc, char** argv) { return crmiss::run_cli(argc, argv, std::cout, std::cerr); }
