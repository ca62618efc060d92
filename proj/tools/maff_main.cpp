#include "maff/cli.hpp"

int main(int argc, char **argv) { return maff::cli::run(argc, argv); }
