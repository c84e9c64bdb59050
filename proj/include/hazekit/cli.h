#pragma once

#include <functional>
#include <string>
#include <vector>

namespace hazekit {

// Full command-line entry point (argv without the program name).
// Returns 0 on success, 2 on usage errors, 1 on runtime failures.
int run_cli(const std::vector<std::string>& args);

// deterministic static-block parallel loop; the partition never affects
// results because every index writes only its own outputs
void parallel_for(int n, int jobs, const std::function<void(int)>& fn);

}  // namespace hazekit
