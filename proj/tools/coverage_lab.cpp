#include "covlab/cli.hpp"

int main(int argc, char** argv) { return covlab::cli::main(argc, argv); }
