#include "audiosr/cli.hpp"

int main(int argc, char** argv) { return audiosr::cli::run(argc, argv); }
