#include "bigue/cli.hpp"

int main(int argc, char** argv) { return bigue::run_cli(argc, argv); }
