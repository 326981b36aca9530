#include <iostream>

#include "pbound/cli_app.h"

int main(int argc, char** argv) { return pbound::run_cli(argc, argv, std::cout, std::cerr); }
