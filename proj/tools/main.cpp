#include <cstdio>

#include "causalnet/version.hpp"

int main() {
  std::printf("causalnet %s\n", causalnet::kVersion);
  return 0;
}
