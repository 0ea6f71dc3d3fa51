#include "matprod/cli.hpp"

int main(int argc, char** argv) { return matprod::cli::run(argc, argv); }
