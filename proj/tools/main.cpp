#include "cli.hpp"

int main(int argc, char** argv) { return gfusion::cli::run(argc, argv); }
