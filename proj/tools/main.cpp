#include "cli.hpp"

int main(int argc, char** argv) { return mpseg::cli::dispatch(argc, argv); }
