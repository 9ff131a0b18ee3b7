// Acceptance battery: prints one line per criterion and fails if any fails.

#include <cstdio>
#include <cstdlib>
#include <string>

#include "lbs/acceptance.hpp"

int main(int argc, char** argv) {
    lbs::AcceptanceOptions opt;
    if (argc > 1) opt.threads = static_cast<unsigned>(std::stoul(argv[1]));
    bool ok = true;
    lbs::run_acceptance(opt, [&](const lbs::CriterionResult& r) {
        std::printf("criterion %2d: %s  %-45s [%.1f s] %s\n", r.id, r.passed ? "PASS" : "FAIL", r.name.c_str(), r.seconds,
                    r.detail.c_str());
        std::fflush(stdout);
        ok = ok && r.passed;
    });
    return ok ? EXIT_SUCCESS : EXIT_FAILURE;
}
