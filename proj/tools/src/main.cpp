#include <iostream>

#include "lsfem_cli/cli.hpp"

int main(int argc, char** argv) { return lsfem::cli::cli_main(argc, argv, std::cout, std::cerr); }
