#include <tfpc/cli.hpp>

int main(int argc, char** argv) { return tfpc::cli_run(argc, argv); }
