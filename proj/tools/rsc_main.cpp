#include "rsc/cli.hpp"

int main(int argc, char** argv) { return rsc::run_cli(argc, argv); }
