// Command-line front end: fit / predict / sample / bench subcommands.
// Implemented in include/hatgp/cli.hpp so the test suite can drive the same
// code paths in-process.

#include "hatgp/cli.hpp"

int main(int argc, char** argv) { return hatgp::cli_main(argc, argv); }
