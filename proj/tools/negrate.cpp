#include <iostream>

#include "negrate/cli.hpp"

int main(int argc, char** argv) {
    return negrate::cli::main_entry(argc, argv, std::cout, std::cerr);
}
