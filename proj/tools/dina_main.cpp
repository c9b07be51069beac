#include "dina/cli.hpp"

int main(int argc, char** argv) { return dina::run_cli(argc, argv); }
