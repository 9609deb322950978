#include "furbi/cli.hpp"

int main(int argc, char** argv) { return furbi::cli::run(argc, argv); }
