#include <vector>

#include "ncfem/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return ncfem::cli::run(args);
}
