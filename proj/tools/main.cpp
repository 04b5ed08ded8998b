#include "commands.hpp"

int main(int argc, char** argv) { return actrob::cli::run_cli(argc, argv); }
