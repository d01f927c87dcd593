#include "cli.hpp"

int main(int argc, char** argv) { return catsim::cli::run(argc, argv); }
