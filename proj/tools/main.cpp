#include "fiberpinn/commands.hpp"

int main(int argc, char** argv) { return fiberpinn::run_cli(argc, argv); }
