#include <iostream>

#include "uniedge/cli.hpp"

int main(int argc, char** argv) { return uniedge::run(argc, argv, std::cout, std::cerr); }
