#include "laclab/cli.hpp"

int main(int argc, char** argv) { return laclab::cli::run(argc, argv); }
