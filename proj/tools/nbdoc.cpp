#include <iostream>

#include "nbdoc/cli/app.hpp"

int main(int argc, char** argv) { return nbdoc::cli::run(argc, argv, std::cout, std::cerr); }
