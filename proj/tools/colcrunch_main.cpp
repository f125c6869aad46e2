#include "colcrunch/cli/cli.hpp"

int main(int argc, char** argv) { return colcrunch::cli::run(argc, argv); }
