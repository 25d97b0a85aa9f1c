#include "posedec/cli.hpp"

int main(int argc, char** argv) { return posedec::cli::run(argc, argv); }
