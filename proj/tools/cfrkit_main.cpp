#include "cfr/cli.hpp"

int main(int argc, char** argv) { return cfr::cli::run(argc, argv); }
