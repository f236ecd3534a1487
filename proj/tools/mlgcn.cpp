#include <iostream>
#include <string>
#include <vector>

#include "mlgcn/cli.hpp"

int main(int argc, char** argv) {
    return mlgcn::run(std::vector<std::string>(argv, argv + argc), std::cout, std::cerr);
}
