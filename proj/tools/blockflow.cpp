#include "cli/cli.hpp"

int main(int argc, char** argv) { return blockflow::cli::run(argc, argv); }
