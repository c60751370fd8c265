#include <iostream>

#include "promptevo/cli.hpp"

int main(int argc, char** argv) { return promptevo::cli::run(argc, argv, std::cout, std::cerr); }
