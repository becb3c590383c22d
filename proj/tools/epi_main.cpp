#include "epinet/harness.hpp"

int main(int argc, char** argv) { return epinet::cli_main(argc, argv); }
