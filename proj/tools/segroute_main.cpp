#include <iostream>
#include <string>
#include <vector>

#include "segroute/cli.hpp"

int main(int argc, char** argv)
{
    std::vector<std::string> args(argv + 1, argv + argc);
    return segroute::cli::dispatch(args, std::cout, std::cerr);
}
