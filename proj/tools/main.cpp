#include "firmmfg/cli.hpp"

int main(int argc, char** argv) { return firmmfg::run_cli(argc, argv); }
