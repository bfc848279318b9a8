#include <iostream>

#include "cyberprem/cli.hpp"

int main(int argc, char** argv) {
    return cyberprem::cli::run_cli(argc, argv, std::cout, std::cerr);
}
