#include <vector>

#include "recigraph/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return recigraph::run_cli(args);
}
