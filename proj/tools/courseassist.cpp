#include "courseassist/app.hpp"

#include <iostream>

int main(int argc, char** argv) { return courseassist::run_cli(argc, argv, std::cout, std::cerr); }
