#include <iostream>

#include "rgtn/commands.hpp"

int main(int argc, char** argv) {
    return rgtn::run_cli(std::vector<std::string>(argv + 1, argv + argc), std::cout, std::cerr);
}
