#include "morsecube/cli.hpp"

int main(int argc, char** argv) { return morsecube::cli_main(argc, argv); }
