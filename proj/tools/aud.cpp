#include <cstdio>

#include "aud/version.hpp"

int main() {
  std::printf("aud %s\n", aud::kToolkitVersion);
  return 0;
}
