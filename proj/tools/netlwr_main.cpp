#include <iostream>

#include "netlwr/cli.hpp"

int main(int argc, char** argv) { return netlwr::cli::main(argc, argv, std::cout, std::cerr); }
