#include "rflab/cli.hpp"

int main(int argc, char** argv) { return rflab::cli::run(argc, argv); }
