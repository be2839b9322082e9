#include "hact/cli.hpp"

int main(int argc, char** argv) { return hact::cli::run(argc, argv); }
