#include "xrl/cli.hpp"

int main(int argc, char** argv) { return xrl::run_command(argc, argv); }
