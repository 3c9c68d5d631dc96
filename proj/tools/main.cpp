#include "cli_app.hpp"

int main(int argc, char** argv) { return ultimax::cli::run(argc, argv); }
