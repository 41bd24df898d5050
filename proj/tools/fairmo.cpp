#include "fairmo/cli.hpp"

int main(int argc, char** argv) { return fairmo::run_cli(argc, argv); }
