#include <iostream>

#include "charc/cli.hpp"

int main(int argc, char** argv)
{
    return charc::run_cli(argc, argv, std::cout, std::cerr);
}
