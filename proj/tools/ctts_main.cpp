#include <string>
#include <vector>

#include "ctts/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return ctts::run_cli(args);
}
