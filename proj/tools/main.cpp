#include "resmeth/cli.hpp"

#include <iostream>

int main(int argc, char** argv)
{
    return resmeth::cli::run(argc, argv, std::cout, std::cerr);
}
