#include <string>
#include <vector>

#include "hazekit/cli.h"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return hazekit::run_cli(args);
}
