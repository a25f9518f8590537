/* Copyright 2026 The mosseg Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

// Acceptance run: one PASS/FAIL line per criterion. Exit status 0 only when
// every criterion passes. argv[1] (optional) is the CLI executable used by
// the end-to-end pipeline criterion, argv[2] a scratch directory.

#include <cstdio>

#include "mosseg/mosseg.h"

namespace {

void Print(void*, const char* name, int passed, const char* detail) {
  std::printf("%s %s  %s\n", passed ? "PASS" : "FAIL", name, detail);
  std::fflush(stdout);
}

}  // namespace

int main(int argc, char** argv) {
  const char* cli = argc > 1 ? argv[1] : nullptr;
  const char* scratch = argc > 2 ? argv[2] : nullptr;
  int failed = 0;
  const mosseg_status s = mosseg_bench_run(cli, scratch, Print, nullptr, &failed);
  if (s != MOSSEG_OK) {
    std::printf("FAIL acceptance  %s: %s\n", mosseg_status_name(s), mosseg_last_error());
    return 1;
  }
  std::printf("%d criteria failed\n", failed);
  return failed == 0 ? 0 : 1;
}
