#include "fingap/cli.hpp"

int main(int argc, char** argv) { return fingap::run_cli(argc, argv); }
