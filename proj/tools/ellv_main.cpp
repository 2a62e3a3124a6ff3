#include "ellv/cli.hpp"

int main(int argc, char** argv) { return ellv::cli_main(argc, argv); }
