#include "psd/cli.hpp"

int main(int argc, char** argv) { return psd::cli_dispatch(argc, argv); }
