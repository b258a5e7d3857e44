#include "texrd/cli.hpp"

int main(int argc, char** argv) { return texrd::cli::run(argc, argv); }
