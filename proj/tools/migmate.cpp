#include "migmate/cli.hpp"

#include <iostream>

#include <unistd.h>

int main(int argc, char** argv)
{
    std::vector<std::string> args(argv + 1, argv + argc);
    migmate::cli::Io io{std::cin, std::cout, std::cerr};
    io.interactive = isatty(STDIN_FILENO) != 0;
    io.handle_signals = true;
    return migmate::cli::run(args, io);
}
