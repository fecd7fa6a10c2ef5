#include <iostream>

#include "caml/cli/commands.hpp"

int main(int argc, char** argv) { return caml::cli::cli_main(argc, argv, std::cout, std::cerr); }
