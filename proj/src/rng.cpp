#include "rogo/rng.hpp"

namespace rogo {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

}  // namespace

Rng substream(std::uint64_t master_seed, std::string_view name) {
    return Rng(splitmix64(splitmix64(master_seed) ^ fnv1a(name)));
}

Vector random_normal(std::size_t n, Rng& rng) {
    std::normal_distribution<double> dist;
    Vector v(n);
    for (double& x : v) x = dist(rng);
    return v;
}

Matrix random_normal(std::size_t rows, std::size_t cols, Rng& rng) {
    std::normal_distribution<double> dist;
    Matrix m(rows, cols);
    for (std::size_t r = 0; r < rows; ++r)
        for (double& x : m.row(r)) x = dist(rng);
    return m;
}

Vector random_unit(std::size_t n, Rng& rng) {
    for (;;) {
        Vector v = random_normal(n, rng);
        const double nv = norm(v);
        if (nv > 1e-12) {
            for (double& x : v) x /= nv;
            return v;
        }
    }
}

}  // namespace rogo
