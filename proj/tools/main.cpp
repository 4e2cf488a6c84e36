#include <iostream>

#include "obata/cli.hpp"

int main(int argc, char** argv) {
  return obata::cli::run(argc, argv, std::cout, std::cerr);
}
