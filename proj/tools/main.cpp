#include "rrdee/cli.hpp"

int main(int argc, char** argv) { return rrdee::run_cli(argc, argv); }
