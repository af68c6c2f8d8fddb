#include "loorisk/cli.hpp"

int main(int argc, char** argv) { return loorisk::cli_main(argc, argv); }
