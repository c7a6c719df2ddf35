#include "npgq/cli.hpp"

int main(int argc, char** argv) { return npgq::cli_main(argc, argv); }
