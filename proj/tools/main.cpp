#include "pedeval/cli/cli.hpp"

int main(int argc, char** argv) { return pedeval::cli::run_main(argc, argv); }
