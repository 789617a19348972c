#include "darwin/cli.hpp"

int main(int argc, char** argv) { return darwin::cli::run(argc, argv); }
