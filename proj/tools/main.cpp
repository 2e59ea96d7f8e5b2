#include "commands.hpp"

int main(int argc, char** argv) { return topseg::cli::run(argc, argv); }
