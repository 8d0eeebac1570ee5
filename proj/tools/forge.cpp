// forge CLI — entry point.  Subcommand wiring lands with the pipeline
// modules; this placeholder keeps the build green meanwhile.
#include <cstdio>

int main(int argc, char** argv) {
  (void)argc;
  (void)argv;
  std::fprintf(stderr, "forge: subcommands not wired yet\n");
  return 2;
}
