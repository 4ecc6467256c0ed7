#include "lavrentiev/cli.hpp"

int main(int argc, char** argv) { return lavrentiev::cli::run(argc, argv); }
