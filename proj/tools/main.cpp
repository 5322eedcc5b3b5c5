#include "hmlc/run/commands.hpp"

int main(int argc, char** argv) { return hmlc::run::main(argc, argv); }
