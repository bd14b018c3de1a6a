#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "rytov/geometry.hpp"
#include "rytov/parallel.hpp"

namespace rytov {

struct MonteCarloSpec {
    std::uint64_t samples = 0;
    std::uint64_t seed = 0;
};

struct McResult {
    cplx mean{0.0, 0.0};
    double standard_error = 0.0;  // max over real/imag parts of sd/sqrt(N)
};

/// Ensemble mean of statistic(sampler(i)) over i = 0..N-1. Deterministic
/// under a fixed seed and independent of the worker count: partial sums are
/// accumulated per fixed-size chunk and combined in chunk order.
template <class Sampler, class Statistic>
McResult mc_mean(const MonteCarloSpec& spec, Sampler&& sampler, Statistic&& stat) {
    const std::uint64_t n = spec.samples;
    if (n < 2) {
        throw std::invalid_argument("mc_mean: need at least 2 samples for a standard error");
    }
    const std::size_t chunks = detail::chunk_count(n);
    std::vector<cplx> sum(chunks, cplx{0.0, 0.0});
    std::vector<double> sum_re2(chunks, 0.0), sum_im2(chunks, 0.0);
    detail::for_each_chunk(n, [&](std::size_t c, std::size_t b, std::size_t e) {
        cplx s{0.0, 0.0};
        double s_re2 = 0.0, s_im2 = 0.0;
        for (std::size_t i = b; i < e; ++i) {
            const cplx v = stat(sampler(static_cast<std::uint64_t>(i)));
            s += v;
            s_re2 += v.real() * v.real();
            s_im2 += v.imag() * v.imag();
        }
        sum[c] = s;
        sum_re2[c] = s_re2;
        sum_im2[c] = s_im2;
    });
    cplx total{0.0, 0.0};
    double total_re2 = 0.0, total_im2 = 0.0;
    for (std::size_t c = 0; c < chunks; ++c) {
        total += sum[c];
        total_re2 += sum_re2[c];
        total_im2 += sum_im2[c];
    }
    McResult out;
    out.mean = total / static_cast<double>(n);
    const double nn = static_cast<double>(n);
    const double var_re =
        std::max(0.0, (total_re2 - nn * out.mean.real() * out.mean.real()) / (nn - 1.0));
    const double var_im =
        std::max(0.0, (total_im2 - nn * out.mean.imag() * out.mean.imag()) / (nn - 1.0));
    out.standard_error = std::sqrt(std::max(var_re, var_im) / nn);
    return out;
}

}  // namespace rytov
