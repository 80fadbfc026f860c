#include "advlab/cli.hpp"

int main(int argc, char** argv) { return advlab::run_cli(argc, argv); }
