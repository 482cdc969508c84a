#include <iostream>

#include "cli.hpp"

int main(int argc, char** argv) {
  try {
    return raylap::cli::main_entry(argc, argv, std::cout, std::cerr);
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return raylap::cli::kInternal;
  }
}
