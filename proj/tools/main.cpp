#include "fairl/cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return fairl::cli_main(argc, argv, std::cout, std::cerr); }
