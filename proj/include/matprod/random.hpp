#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <random>

#include <Eigen/Dense>

namespace matprod {

using Rng = std::mt19937_64;
using CMatrix = Eigen::MatrixXcd;

// independent stream for (seed, stream, block); blocks are fixed-size runs of draws
inline Rng make_rng(std::uint64_t seed, std::uint64_t stream, std::uint64_t block = 0)
{
    std::seed_seq seq{std::uint32_t(seed), std::uint32_t(seed >> 32), std::uint32_t(stream),
                      std::uint32_t(stream >> 32), std::uint32_t(block), std::uint32_t(block >> 32)};
    return Rng(seq);
}

// unit complex variance: real and imaginary parts N(0, 1/2)
inline CMatrix ginibre(int n, int m, Rng& g)
{
    std::normal_distribution<double> nd(0.0, std::sqrt(0.5));
    CMatrix z(n, m);
    for (int j = 0; j < m; ++j)
        for (int i = 0; i < n; ++i)
            z(i, j) = {nd(g), nd(g)};
    return z;
}

inline CMatrix ginibre(int n, Rng& g) { return ginibre(n, n, g); }

// Q of a Ginibre QR with R_jj made positive
inline CMatrix haar_unitary(int n, Rng& g)
{
    Eigen::HouseholderQR<CMatrix> qr(ginibre(n, g));
    CMatrix q = qr.householderQ();
    const CMatrix& r = qr.matrixQR();
    for (int j = 0; j < n; ++j) {
        const std::complex<double> d = r(j, j);
        const double a = std::abs(d);
        if (a > 0.0)
            q.col(j) *= d / a;
    }
    return q;
}

} // namespace matprod
