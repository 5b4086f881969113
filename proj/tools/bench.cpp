// Timing comparison between the OpenMP kernels, their serial twins, and
// the dense reference implementations.
#include <chrono>
#include <cstdio>
#include <random>

#include "gm/group.hpp"
#include "gm/layers.hpp"
#include "gm/nn.hpp"

using namespace gm;

namespace {

using Clock = std::chrono::steady_clock;

template <typename Fn>
double time_ms(int repeats, Fn&& fn) {
    fn();  // warm up
    auto start = Clock::now();
    for (int r = 0; r < repeats; ++r) fn();
    return std::chrono::duration<double, std::milli>(Clock::now() - start).count() / repeats;
}

Channels random_channels(int channels, int n, std::mt19937_64& rng) {
    std::normal_distribution<double> dist;
    Channels x(channels, Eigen::VectorXd(n));
    for (auto& c : x)
        for (int i = 0; i < n; ++i) c(i) = dist(rng);
    return x;
}

void bench_conv(const FiniteGroup& g, int channels, int repeats) {
    std::mt19937_64 rng(1);
    GmConvLayer layer = make_conv_layer(g, 1, channels, channels, ErrorKind::None, 0, &rng);
    Channels x = random_channels(channels, g.order(), rng);
    Channels dy = random_channels(channels, g.order(), rng);

    double fwd_par = time_ms(repeats, [&] { conv_forward(layer, x, Exec::Parallel); });
    double fwd_ser = time_ms(repeats, [&] { conv_forward(layer, x, Exec::Serial); });
    double fwd_ref = time_ms(1, [&] { reference::conv_forward(layer, x); });
    double bwd_par = time_ms(repeats, [&] { conv_backward(layer, x, dy, Exec::Parallel); });
    double bwd_ser = time_ms(repeats, [&] { conv_backward(layer, x, dy, Exec::Serial); });

    std::printf("conv      |G|=%5d ch=%2d  fwd par %8.3f ms  ser %8.3f ms  dense-ref %8.3f ms\n",
                g.order(), channels, fwd_par, fwd_ser, fwd_ref);
    std::printf("conv-bwd  |G|=%5d ch=%2d      par %8.3f ms  ser %8.3f ms\n", g.order(),
                channels, bwd_par, bwd_ser);
}

void bench_pool(const FiniteGroup& g, const Subgroup& h, int channels, int repeats) {
    std::mt19937_64 rng(2);
    GmPoolLayer layer = make_pool_layer(g, h, PoolMode::Mean, channels);
    Channels x = random_channels(channels, g.order(), rng);
    double par = time_ms(repeats, [&] { pool_forward(layer, x, Exec::Parallel); });
    double ser = time_ms(repeats, [&] { pool_forward(layer, x, Exec::Serial); });
    std::printf("pool      |G|=%5d ch=%2d      par %8.3f ms  ser %8.3f ms\n", g.order(),
                channels, par, ser);
}

}  // namespace

int main() {
    std::printf("threads: %d\n", max_threads());

    FiniteGroup small = direct_product(make_cyclic(8), make_cyclic(8));
    FiniteGroup medium = direct_product(make_cyclic(16), make_cyclic(16));
    FiniteGroup large = direct_product(make_cyclic(32), make_cyclic(32));

    bench_conv(small, 8, 50);
    bench_conv(medium, 8, 20);
    bench_conv(large, 8, 10);
    bench_conv(large, 16, 5);

    Subgroup h = Subgroup::from_generators(large, {2 * 32 + 0, 0 * 32 + 2});
    bench_pool(large, h, 16, 20);
    return 0;
}
