#include <iostream>

#include "webflow_cli.hpp"

int main(int argc, char** argv) { return webflow::cli::run_cli(argc, argv, std::cout, std::cerr); }
