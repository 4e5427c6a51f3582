#include "freqbin/cli.hpp"

int main(int argc, char** argv) { return freqbin::cli::run_command(argc, argv); }
