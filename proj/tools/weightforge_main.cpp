#include "weightforge/cli.hpp"

int main(int argc, char** argv) { return weightforge::cli_main(argc, argv); }
