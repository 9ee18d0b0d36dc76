#include "epsbench/cli.hpp"

int main(int argc, char** argv) { return epsbench::run_cli(argc, argv); }
