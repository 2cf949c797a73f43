#include "ews/cli.hpp"

int main(int argc, char** argv) { return ews::cli::run(argc, argv); }
