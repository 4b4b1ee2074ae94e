#include "dvoi/cli.h"

int main(int argc, char **argv) { return dvoi::cli::run(argc, argv); }
