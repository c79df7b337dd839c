#include "qclab/explorer.hpp"

int main(int argc, char** argv) { return qclab::run_cli(argc, argv); }
