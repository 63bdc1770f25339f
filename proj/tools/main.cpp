#include "cli.hpp"

int main(int argc, char** argv) { return dpcp::cli::dispatch(argc, argv); }
