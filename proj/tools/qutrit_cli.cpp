#include "qutrit/cli.hpp"

int main(int argc, char** argv) { return qutrit::cli::run_cli(argc, argv); }
