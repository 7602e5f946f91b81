#include "cli.hpp"

int main(int argc, char** argv) { return entlab::cli::run_main(argc, argv); }
