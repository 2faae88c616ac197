// Throughput comparison of the simulation kernels (per-slot serial,
// per-slot OpenMP, geometric slot-skipping) and of the two Toeplitz
// multiplication routes.
#include <chrono>
#include <cstdio>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "fsqkd/channel.hpp"
#include "fsqkd/postproc.hpp"
#include "fsqkd/runner.hpp"

using namespace fsqkd;
using clock_type = std::chrono::steady_clock;

namespace {

double seconds_since(clock_type::time_point t0) {
    return std::chrono::duration<double>(clock_type::now() - t0).count();
}

std::size_t run_kernel(TagStreamSimulator::Kernel k, double sim_seconds, double& wall) {
    ChannelConfig cfg;
    cfg.link.coupling.lognormal_sigma = 0.0;
    TagStreamSimulator sim(cfg, 42, k);
    const auto t0 = clock_type::now();
    const auto tags = sim.next_chunk(sim_seconds);
    wall = seconds_since(t0);
    return tags.size();
}

// bit-by-bit matrix product, the transparent route
BitVec toeplitz_naive(const BitVec& key, std::size_t l, const BitVec& seed) {
    const std::size_t n = key.size();
    BitVec out(l);
    for (std::size_t j = 0; j < l; ++j) {
        bool acc = false;
        for (std::size_t i = 0; i < n; ++i)
            if (key.get(i) && seed.get(j + n - 1 - i)) acc = !acc;
        out.set(j, acc);
    }
    return out;
}

} // namespace

int main() {
#ifdef _OPENMP
    std::printf("OpenMP: %d thread(s)\n", omp_get_max_threads());
#else
    std::printf("OpenMP: not enabled\n");
#endif

    const double sim_s = 0.5;
    const double slots = 50e6 * sim_s;
    for (auto [kernel, name] : {std::pair{TagStreamSimulator::Kernel::serial, "per-slot serial"},
                                std::pair{TagStreamSimulator::Kernel::openmp, "per-slot openmp"},
                                std::pair{TagStreamSimulator::Kernel::fast, "slot-skipping  "}}) {
        double wall = 0;
        const std::size_t tags = run_kernel(kernel, sim_s, wall);
        std::printf("%s : %8.3f s for %.0f slots (%7.1f Mslot/s, %zu tags)\n",
                    name, wall, slots, slots / wall / 1e6, tags);
    }

    RandomSource rng(7);
    const std::size_t n = 1u << 14, l = n / 2;
    BitVec key(n);
    for (auto& w : key.words()) w = rng.next_u64();
    BitVec seed = toeplitz_seed(n, l, rng);

    auto t0 = clock_type::now();
    const BitVec fast = toeplitz_pa(key, l, seed);
    const double t_fast = seconds_since(t0);
    t0 = clock_type::now();
    const BitVec naive = toeplitz_naive(key, l, seed);
    const double t_naive = seconds_since(t0);
    std::printf("toeplitz %zu -> %zu bits: convolution %.6f s, naive %.6f s, equal: %s\n",
                n, l, t_fast, t_naive, fast == naive ? "yes" : "NO");
    return fast == naive ? 0 : 1;
}
