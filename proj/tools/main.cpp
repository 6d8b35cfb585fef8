#include "pamcts/cli.hpp"

int main(int argc, char** argv) { return pamcts::cli_main(argc, argv); }
