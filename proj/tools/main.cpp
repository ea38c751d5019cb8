#include <iostream>

#include "vtc/cli.hpp"

int main(int argc, char** argv) { return vtc::run(argc, argv, std::cout, std::cerr); }
