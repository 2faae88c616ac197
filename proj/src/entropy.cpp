#include "fsqkd/postproc.hpp"

#include <cmath>
#include <stdexcept>

namespace fsqkd {

double binary_entropy(double q) {
    if (!(q >= 0.0 && q <= 1.0))
        throw std::domain_error("binary_entropy: q must lie in [0,1]");
    if (q == 0.0 || q == 1.0) return 0.0;
    return -q * std::log2(q) - (1.0 - q) * std::log2(1.0 - q);
}

} // namespace fsqkd
