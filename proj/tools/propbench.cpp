#include "propbench/cli.hpp"

int main(int argc, char** argv) { return propbench::cli_dispatch(argc, argv); }
