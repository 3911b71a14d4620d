#include "plsshrink/cli.hpp"

int main(int argc, char** argv) { return plsshrink::run_main(argc, argv); }
