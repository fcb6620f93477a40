#include "cli.hpp"

int main(int argc, char** argv) { return aqd::cli::run(argc, argv); }
