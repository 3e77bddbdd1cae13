#include "graphshield/pipeline/cli.hpp"

int main(int argc, char** argv) { return graphshield::pipeline::run_cli(argc, argv); }
