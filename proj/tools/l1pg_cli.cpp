#include "l1pg/harness/cli.hpp"

int main(int argc, char **argv) { return l1pg::harness::cli_main(argc, argv); }
