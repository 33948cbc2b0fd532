#include "unveiler/cli.hpp"

int main(int argc, char** argv) { return unveiler::cli::dispatch(argc, argv); }
