#include <vdc/cli.hpp>

#include <iostream>

int main(int argc, char **argv)
{
    return vdc::cli::dispatch(argc, argv, std::cout, std::cerr);
}
