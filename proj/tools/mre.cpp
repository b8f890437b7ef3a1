#include "mre/cli.hpp"

int main(int argc, char** argv) { return mre::cli::main(argc, argv); }
