// Property-based acceptance suite. One line per criterion; exits nonzero on
// any failure. Everything here runs on synthetic instances in well under a
// minute.

#include <cstdio>
#include <cstring>

#include "ogdbench/verify.hpp"

int main(int argc, char** argv) {
  ogdbench::VerifyOptions options;
  options.dims = 1000;  // basis properties at the full stated size
  for (int i = 1; i < argc; ++i) {
    if (std::strcmp(argv[i], "--dims") == 0 && i + 1 < argc) {
      options.dims = std::atoi(argv[++i]);
    }
  }

  const auto results = ogdbench::run_verify(options);
  bool all_pass = true;
  for (const auto& r : results) {
    all_pass = all_pass && r.pass;
    std::printf("%s  %-28s residual %.3e  %s\n", r.pass ? "PASS" : "FAIL", r.name.c_str(),
                r.residual, r.detail.c_str());
  }
  std::printf("%s\n", all_pass ? "ACCEPTANCE (fast): all properties pass"
                               : "ACCEPTANCE (fast): FAILURES present");
  return all_pass ? 0 : 1;
}
