// SPDX-License-Identifier: Apache-2.0
#include <iostream>

#include "specagent/cli.hpp"

int main(int argc, char** argv) { return specagent::run_cli(argc, argv, std::cout, std::cerr); }
