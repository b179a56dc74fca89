#include "xsslab/cli.hpp"

int main(int argc, char** argv) { return xsslab::run_cli(argc, argv); }
