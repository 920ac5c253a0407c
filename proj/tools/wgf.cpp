#include "wgf/cli.hpp"

int main(int argc, char** argv) { return wgf::cli_run(argc, argv); }
