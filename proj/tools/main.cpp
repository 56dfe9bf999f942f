#include "fieldrec/cli.hpp"

int main(int argc, char** argv) { return fieldrec::cli_main(argc, argv); }
