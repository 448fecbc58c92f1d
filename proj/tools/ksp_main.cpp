#include "ksp/cli.hpp"

int main(int argc, char** argv) { return ksp::cli::run(argc, argv); }
