#include "zq/cli.hpp"

int main(int argc, char** argv) { return zq::cli::run(argc, argv); }
