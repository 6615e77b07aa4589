#include "igss/cli/cli.hpp"

#include <iostream>

int main(int argc, char** argv) {
  return igss::cli::run({argv + 1, argv + argc}, std::cout, std::cerr);
}
