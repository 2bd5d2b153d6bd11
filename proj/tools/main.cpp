#include "cli.hpp"

int main(int argc, char** argv) { return implode::cli_main(argc, argv); }
