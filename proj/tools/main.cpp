#include "latdiag/cli.hpp"

int main(int argc, char** argv) { return latdiag::cli::run_main(argc, argv); }
