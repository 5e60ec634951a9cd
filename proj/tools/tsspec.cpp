#include <iostream>
#include <string>
#include <vector>

#include "tsspec/cli.hpp"

int main(int argc, char** argv)
{
    std::vector<std::string> args(argv, argv + argc);
    return tss::cli::run(args, std::cout, std::cerr);
}
