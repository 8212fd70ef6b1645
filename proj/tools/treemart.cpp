#include "treemart/cli.hpp"

int main(int argc, char** argv) { return treemart::cli::run(argc, argv); }
