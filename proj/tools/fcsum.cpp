#include "fcsum/cli.hpp"

int main(int argc, char** argv) { return fcsum::cli::dispatch(argc, argv); }
