// Minimal library usage: generate an instance, solve it, verify the
// certificate independently.

#include <iostream>

#include "padform/io.hpp"
#include "padform/oracle.hpp"
#include "padform/solver.hpp"

int main() {
    using namespace padform;
    auto fp = generate_instance(5, 1, /*seed=*/7, /*slack=*/1);
    std::cout << "instance: p = " << fp.P.p << ", tau = " << fp.P.tau << ", s = " << fp.s()
              << "\n";
    auto sol = solve(fp, /*N=*/6);
    std::cout << "solved at precision 5^" << sol.precision << ", witness pair (" << sol.ns_i + 1
              << ", " << sol.ns_j + 1 << ")\n";
    std::vector<Int> values;
    for (const auto& r : sol.assignment) values.push_back(r.value);
    auto chk = verify_nonsingular(fp, values, sol.precision);
    std::cout << (chk.ok ? "verified" : "FAILED: " + chk.reason) << "\n";
    auto orc = dp_nonsingular_search(fp);
    std::cout << "oracle " << (orc.found ? "agrees" : "disagrees") << "\n";
    return chk.ok && orc.found ? 0 : 1;
}
