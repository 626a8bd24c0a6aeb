#include <iostream>

#include "coreshell/commands.hpp"

int main(int argc, char** argv) { return coreshell::run_cli(argc, argv, std::cerr); }
