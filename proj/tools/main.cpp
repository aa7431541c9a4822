#include "cli.hpp"

int main(int argc, char** argv) { return sdmscr::cli::run(argc, argv); }
