#include "sdpc/cli_io.hpp"

int main(int argc, char** argv) { return sdpc::cli_main(argc, argv); }
