// main.cpp

#include "commands.hpp"

int main(int argc, char **argv) { return mclpbeam::cli::Run(argc, argv); }
