#include <iostream>
#include <string>
#include <vector>

#include "bwd/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return bwd::cli::run(args, std::cout, std::cerr);
}
