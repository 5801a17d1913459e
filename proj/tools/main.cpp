#include "cli_app.hpp"

int main(int argc, char** argv) { return snnf::cli::runCli(argc, argv); }
