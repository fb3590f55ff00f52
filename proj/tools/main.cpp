#include <iostream>
#include <string>
#include <vector>

#include "vtax/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return vtax::cli::run(args, std::cout, std::cerr, std::cin);
}
