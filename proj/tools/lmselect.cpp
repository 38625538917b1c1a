#include "lmselect/cli.hpp"

int main(int argc, char** argv) { return lmselect::cli::run(argc, argv); }
