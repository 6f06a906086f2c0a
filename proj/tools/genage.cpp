#include "genage/cli.hpp"

int main(int argc, char** argv) { return genage::run_cli(argc, argv); }
