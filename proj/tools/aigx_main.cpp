#include "aigx/commands.hpp"

int main(int argc, char** argv) { return aigx::cli::run_main(argc, argv); }
