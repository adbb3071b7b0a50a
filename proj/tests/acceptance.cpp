// One line per acceptance criterion; exit status 1 if any fails.
#include <cstdio>

#include "blowup/verify.hpp"

int main() {
    int failed = 0;
    blowup::verify::run_all(20240601, [&](const blowup::verify::CheckResult& r) {
        std::printf("%s\n", blowup::verify::format_line(r).c_str());
        std::fflush(stdout);
        if (!r.pass) ++failed;
    });
    std::printf("%d of 10 criteria failed\n", failed);
    return failed == 0 ? 0 : 1;
}
