#pragma once

// Seeded Monte Carlo for the binary branching random walk with +-1 steps.
//
// Particles are exchangeable, so a level is a histogram of counts per
// position; splitting a site with c particles sends Binomial(2c, p) children
// up and the rest down. Replica i draws from its own generator seeded by
// mixing (master seed, i) with SplitMix64, and results are reduced in fixed
// blocks of replicas in index order, so the output does not depend on the
// number of worker threads.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <numbers>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include "hmax/errors.hpp"

namespace hmax::mc {

__extension__ typedef unsigned __int128 Count;

inline constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

/// SplitMix64 finalizer.
inline std::uint64_t mix64(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

/// Output number index+1 of the SplitMix64 sequence started at `master`.
inline std::uint64_t replica_seed(std::uint64_t master, std::uint64_t index) {
    return mix64(master + (index + 1) * kGolden);
}

class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    /// Uniform on [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    /// Standard normal via Box-Muller (the sine branch is discarded).
    double normal() {
        double u1 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    }

private:
    std::mt19937_64 engine_;
};

struct SamplerStats {
    std::uint64_t exact_draws = 0;
    std::uint64_t normal_draws = 0;  // crossover events: 2c above kExactLimit

    SamplerStats& operator+=(const SamplerStats& o) {
        exact_draws += o.exact_draws;
        normal_draws += o.normal_draws;
        return *this;
    }
};

inline constexpr std::uint64_t kExactLimit = 1'000'000;

namespace detail {

inline std::uint64_t binomial_small_mean(std::uint64_t t, double p, Rng& rng) {
    const double q = 1.0 - p;
    double pmf = std::pow(q, static_cast<double>(t));
    double u = rng.uniform();
    for (std::uint64_t k = 0; k <= t; ++k) {
        u -= pmf;
        if (u < 0.0) return k;
        pmf *= static_cast<double>(t - k) / static_cast<double>(k + 1) * (p / q);
    }
    return static_cast<std::uint64_t>(std::floor(static_cast<double>(t + 1) * p));
}

// Inverse cdf over outcomes ordered mode, mode+1, mode-1, mode+2, ...
inline std::uint64_t binomial_from_mode(std::uint64_t t, double p, Rng& rng) {
    const double q = 1.0 - p;
    const double tt = static_cast<double>(t);
    auto mode = static_cast<std::uint64_t>(std::floor((tt + 1.0) * p));
    if (mode > t) mode = t;
    const double md = static_cast<double>(mode);
    const double log_pm = std::lgamma(tt + 1.0) - std::lgamma(md + 1.0) - std::lgamma(tt - md + 1.0) +
                          md * std::log(p) + (tt - md) * std::log(q);
    const double pm = std::exp(log_pm);
    double u = rng.uniform() - pm;
    if (u < 0.0) return mode;
    std::uint64_t up = mode, down = mode;
    double pu = pm, pd = pm;
    while (true) {
        bool moved = false;
        if (up < t) {
            pu *= static_cast<double>(t - up) / static_cast<double>(up + 1) * (p / q);
            ++up;
            u -= pu;
            if (u < 0.0) return up;
            moved = true;
        }
        if (down > 0) {
            pd *= static_cast<double>(down) / static_cast<double>(t - down + 1) * (q / p);
            --down;
            u -= pd;
            if (u < 0.0) return down;
            moved = true;
        }
        // leftover mass from pmf rounding
        if (!moved || (pu < 1e-300 && pd < 1e-300)) return mode;
    }
}

}  // namespace detail

/// Binomial(trials, p). Exact for trials <= kExactLimit, normal approximation
/// with continuity correction above (counted in `stats`).
inline Count sample_binomial(Count trials, double p, Rng& rng, SamplerStats* stats = nullptr) {
    if (!(p >= 0.0 && p <= 1.0)) throw DomainError("sample_binomial: p outside [0,1]");
    if (trials == 0 || p == 0.0) return 0;
    if (p == 1.0) return trials;
    if (trials > kExactLimit) {
        if (stats) ++stats->normal_draws;
        const double t = static_cast<double>(trials);
        const double draw = std::floor(t * p + std::sqrt(t * p * (1.0 - p)) * rng.normal() + 0.5);
        if (draw <= 0.0) return 0;
        if (draw >= t) return trials;
        return static_cast<Count>(draw);
    }
    if (stats) ++stats->exact_draws;
    const auto t = static_cast<std::uint64_t>(trials);
    const bool flip = p > 0.5;
    const double pp = flip ? 1.0 - p : p;
    const std::uint64_t k = static_cast<double>(t) * pp < 30.0 ? detail::binomial_small_mean(t, pp, rng)
                                                               : detail::binomial_from_mode(t, pp, rng);
    return flip ? t - k : k;
}

/// Particle counts at positions -level, -level+2, ..., level.
struct LevelHistogram {
    int level = 0;
    std::vector<Count> counts{1};

    std::int64_t position(std::size_t i) const { return -level + 2 * static_cast<std::int64_t>(i); }

    Count total() const {
        Count s = 0;
        for (Count c : counts) s += c;
        return s;
    }

    /// Index of the highest occupied site.
    std::size_t top_index() const {
        for (std::size_t i = counts.size(); i-- > 0;)
            if (counts[i] != 0) return i;
        throw DomainError("LevelHistogram: empty histogram");
    }
};

inline LevelHistogram split_level(const LevelHistogram& h, double p, Rng& rng,
                                  SamplerStats* stats = nullptr) {
    if (h.level >= 127) throw DomainError("split_level: level must be < 127 (128-bit counts)");
    if (!(p >= 0.0 && p <= 1.0)) throw DomainError("split_level: p outside [0,1]");
    LevelHistogram out;
    out.level = h.level + 1;
    out.counts.assign(h.counts.size() + 1, 0);
    for (std::size_t i = 0; i < h.counts.size(); ++i) {
        const Count c = h.counts[i];
        if (c == 0) continue;
        const Count children = 2 * c;
        const Count up = sample_binomial(children, p, rng, stats);
        out.counts[i] += children - up;
        out.counts[i + 1] += up;
    }
    return out;
}

struct LevelStats {
    int level;
    double mean_M;
    double var_M;
    double mean_K;
    double p_K_le_4;
    double mean_increment;  // E(M_{k+1} - M_k); NaN at the last level
    double var_increment;
};

struct BrwResult {
    int n;
    double p;
    std::uint64_t seed;
    std::uint64_t replicas;
    std::vector<LevelStats> levels;
    /// deficiency_counts[k][x] = number of replicas with (k - M_k)/2 = x
    std::vector<std::vector<std::uint64_t>> deficiency_counts;
    /// argmax_counts[k][j] = replicas with K_k = j + 1, last slot pooling K_k >= kArgmaxSlots
    std::vector<std::vector<std::uint64_t>> argmax_counts;
    SamplerStats sampler;
    bool conservation_ok = true;
};

namespace detail {

inline constexpr std::uint64_t kBlock = 256;
inline constexpr std::size_t kArgmaxSlots = 8;

template <class Work>
void for_each_block(std::uint64_t blocks, int threads, const Work& work) {
    if (threads <= 1 || blocks <= 1) {
        for (std::uint64_t b = 0; b < blocks; ++b) work(b);
        return;
    }
    std::atomic<std::uint64_t> next{0};
    std::vector<std::thread> pool;
    const auto count = static_cast<std::uint64_t>(threads) < blocks ? static_cast<std::uint64_t>(threads) : blocks;
    for (std::uint64_t t = 0; t < count; ++t) {
        pool.emplace_back([&] {
            for (std::uint64_t b = next++; b < blocks; b = next++) work(b);
        });
    }
    for (auto& th : pool) th.join();
}

struct BrwBlock {
    std::vector<double> sum_m, sum_m2, sum_k, sum_inc, sum_inc2;
    std::vector<std::uint64_t> k_le_4;
    std::vector<std::vector<std::uint64_t>> deficiency;
    std::vector<std::vector<std::uint64_t>> argmax;
    SamplerStats sampler;
    bool conserved = true;

    explicit BrwBlock(int n)
        : sum_m(n + 1), sum_m2(n + 1), sum_k(n + 1), sum_inc(n + 1), sum_inc2(n + 1),
          k_le_4(n + 1), deficiency(n + 1), argmax(n + 1, std::vector<std::uint64_t>(kArgmaxSlots, 0)) {
        for (int k = 0; k <= n; ++k) deficiency[k].assign(static_cast<std::size_t>(k + 1), 0);
    }
};

}  // namespace detail

inline int default_threads() {
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

inline BrwResult simulate_brw(int n, double p, std::uint64_t seed, std::uint64_t replicas,
                              int threads = 1) {
    if (n < 0 || n > 127) throw DomainError("simulate_brw: n must lie in [0, 127]");
    if (!(p >= 0.0 && p <= 1.0)) throw DomainError("simulate_brw: p outside [0,1]");
    if (replicas == 0) throw DomainError("simulate_brw: replicas must be positive");

    const std::uint64_t blocks = (replicas + detail::kBlock - 1) / detail::kBlock;
    std::vector<detail::BrwBlock> partial(blocks, detail::BrwBlock(n));

    detail::for_each_block(blocks, threads, [&](std::uint64_t b) {
        auto& acc = partial[b];
        const std::uint64_t end = std::min(replicas, (b + 1) * detail::kBlock);
        std::vector<std::int64_t> top(static_cast<std::size_t>(n + 1));
        for (std::uint64_t r = b * detail::kBlock; r < end; ++r) {
            Rng rng(replica_seed(seed, r));
            LevelHistogram h;
            for (int k = 0; k <= n; ++k) {
                if (k > 0) h = split_level(h, p, rng, &acc.sampler);
                if (h.total() != (Count{1} << k)) acc.conserved = false;
                const std::size_t i = h.top_index();
                const std::int64_t m = h.position(i);
                const double kk = static_cast<double>(h.counts[i]);
                top[static_cast<std::size_t>(k)] = m;
                acc.sum_m[k] += static_cast<double>(m);
                acc.sum_m2[k] += static_cast<double>(m * m);
                acc.sum_k[k] += kk;
                if (h.counts[i] <= 4) ++acc.k_le_4[k];
                const Count slot = std::min<Count>(h.counts[i], detail::kArgmaxSlots);
                ++acc.argmax[k][static_cast<std::size_t>(slot) - 1];
                ++acc.deficiency[k][static_cast<std::size_t>((k - m) / 2)];
                if (k > 0) {
                    const double inc = static_cast<double>(m - top[static_cast<std::size_t>(k - 1)]);
                    acc.sum_inc[k - 1] += inc;
                    acc.sum_inc2[k - 1] += inc * inc;
                }
            }
        }
    });

    detail::BrwBlock total(n);
    for (const auto& acc : partial) {
        for (int k = 0; k <= n; ++k) {
            total.sum_m[k] += acc.sum_m[k];
            total.sum_m2[k] += acc.sum_m2[k];
            total.sum_k[k] += acc.sum_k[k];
            total.sum_inc[k] += acc.sum_inc[k];
            total.sum_inc2[k] += acc.sum_inc2[k];
            total.k_le_4[k] += acc.k_le_4[k];
            for (std::size_t x = 0; x < acc.deficiency[k].size(); ++x)
                total.deficiency[k][x] += acc.deficiency[k][x];
            for (std::size_t j = 0; j < detail::kArgmaxSlots; ++j) total.argmax[k][j] += acc.argmax[k][j];
        }
        total.sampler += acc.sampler;
        total.conserved = total.conserved && acc.conserved;
    }

    BrwResult res{n, p, seed, replicas, {}, std::move(total.deficiency), std::move(total.argmax),
                  total.sampler, total.conserved};
    const double r = static_cast<double>(replicas);
    for (int k = 0; k <= n; ++k) {
        LevelStats s{};
        s.level = k;
        s.mean_M = total.sum_m[k] / r;
        s.var_M = std::max(0.0, total.sum_m2[k] / r - s.mean_M * s.mean_M);
        s.mean_K = total.sum_k[k] / r;
        s.p_K_le_4 = static_cast<double>(total.k_le_4[k]) / r;
        if (k < n) {
            s.mean_increment = total.sum_inc[k] / r;
            s.var_increment = std::max(0.0, total.sum_inc2[k] / r - s.mean_increment * s.mean_increment);
        } else {
            s.mean_increment = std::numeric_limits<double>::quiet_NaN();
            s.var_increment = std::numeric_limits<double>::quiet_NaN();
        }
        res.levels.push_back(s);
    }
    return res;
}

struct GwResult {
    int n;
    std::uint64_t seed;
    std::uint64_t replicas;
    /// empirical counts of Z_n after the restart rule
    std::map<std::uint64_t, std::uint64_t> counts;
    /// replicas that went extinct at the final step and were restarted to 1
    std::uint64_t extinct_at_last_step = 0;
    SamplerStats sampler;

    double probability(std::uint64_t z) const {
        auto it = counts.find(z);
        return it == counts.end() ? 0.0 : static_cast<double>(it->second) / static_cast<double>(replicas);
    }
};

/// Critical Galton-Watson chain with offspring pgf ((1+s)/2)^2, restarted at 1
/// whenever it dies out: Z_{k+1} = Binomial(2 Z_k, 1/2), 0 -> 1.
inline GwResult simulate_gw_restart(int n, std::uint64_t replicas, std::uint64_t seed,
                                    int threads = 1) {
    if (n < 0) throw DomainError("simulate_gw_restart: negative level");
    if (replicas == 0) throw DomainError("simulate_gw_restart: replicas must be positive");
    const std::uint64_t blocks = (replicas + detail::kBlock - 1) / detail::kBlock;
    struct Block {
        std::map<std::uint64_t, std::uint64_t> counts;
        std::uint64_t extinct = 0;
        SamplerStats sampler;
    };
    std::vector<Block> partial(blocks);
    detail::for_each_block(blocks, threads, [&](std::uint64_t b) {
        auto& acc = partial[b];
        const std::uint64_t end = std::min(replicas, (b + 1) * detail::kBlock);
        for (std::uint64_t r = b * detail::kBlock; r < end; ++r) {
            Rng rng(replica_seed(seed, r));
            Count z = 1;
            bool died_last = false;
            for (int k = 0; k < n; ++k) {
                z = sample_binomial(2 * z, 0.5, rng, &acc.sampler);
                died_last = z == 0;
                if (z == 0) z = 1;
            }
            if (died_last) ++acc.extinct;
            ++acc.counts[static_cast<std::uint64_t>(z)];
        }
    });
    GwResult res{n, seed, replicas, {}, 0, {}};
    for (const auto& acc : partial) {
        for (const auto& [z, c] : acc.counts) res.counts[z] += c;
        res.extinct_at_last_step += acc.extinct;
        res.sampler += acc.sampler;
    }
    return res;
}

}  // namespace hmax::mc
