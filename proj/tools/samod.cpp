#include <iostream>

#include "samod/cli.hpp"

int main(int argc, char** argv)
{
    return samod::cli::run(argc, argv, std::cout, std::cerr);
}
