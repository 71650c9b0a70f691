#include <iostream>

#include "sampaudit/cli/app.hpp"

int main(int argc, char** argv) { return sampaudit::cli::run(argc, argv, std::cout, std::cerr); }
