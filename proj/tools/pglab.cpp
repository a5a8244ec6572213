#include "pglab/cli.hpp"

int main(int argc, char** argv) { return pglab::cli::run(argc, argv); }
