#include <malloc.h>

#include <iostream>
#include <string>
#include <vector>

#include "grinn/cli.hpp"

int main(int argc, char** argv) {
  // Training allocates the same large jet buffers every iteration; keep them
  // on the heap instead of mapping and unmapping pages each time.
  mallopt(M_MMAP_THRESHOLD, 256 << 20);
  mallopt(M_TRIM_THRESHOLD, 1 << 30);
  std::vector<std::string> args(argv + 1, argv + argc);
  return grinn::run_command(args, std::cout, std::cerr);
}
