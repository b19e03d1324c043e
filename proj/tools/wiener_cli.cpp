#include "wiener/cli.hpp"

int main(int argc, char** argv) { return wiener::cli::main_entry(argc, argv); }
