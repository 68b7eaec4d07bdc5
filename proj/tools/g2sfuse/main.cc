#include "commands.h"

int main(int argc, char** argv) { return g2sfuse::dispatch(argc, argv); }
