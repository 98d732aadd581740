#include "oracle/cli.hpp"

int main(int argc, char** argv) { return oracle::dispatch(argc, argv); }
