#include "cli.hpp"

int main(int argc, char** argv) { return parafac::cli::run(argc, argv); }
