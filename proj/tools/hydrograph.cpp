#include "hydrograph/cli.hpp"

int main(int argc, char** argv) { return hydrograph::cli::cli_main(argc, argv); }
