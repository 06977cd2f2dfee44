#include <benchmark/benchmark.h>

// The distro's benchmark_main archive is LTO bytecode from another compiler
// release, so the entry point is compiled here.
BENCHMARK_MAIN();
