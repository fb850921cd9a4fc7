#include "mra/cli.hpp"

int main(int argc, char** argv) { return mra::cli::run(argc, argv); }
