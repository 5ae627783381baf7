#include "homtype/cli.hpp"

int main(int argc, char** argv) { return homtype::cli::run(argc, argv); }
