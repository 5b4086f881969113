// Independent reference computations used by the unit and acceptance
// suites. Everything here goes through defining formulas (double sums,
// dense rebuilds, finite differences) rather than the library's
// gather-based paths.
#pragma once

#include <Eigen/Dense>
#include <array>
#include <cmath>
#include <functional>
#include <random>
#include <vector>

#include "gm/group.hpp"
#include "gm/layers.hpp"

namespace oracles {

inline Eigen::VectorXd random_vector(int n, std::mt19937_64& rng) {
    std::normal_distribution<double> dist;
    Eigen::VectorXd v(n);
    for (int i = 0; i < n; ++i) v(i) = dist(rng);
    return v;
}

inline Eigen::MatrixXd random_matrix(int n, std::mt19937_64& rng) {
    Eigen::MatrixXd m(n, n);
    for (int i = 0; i < n; ++i) m.row(i) = random_vector(n, rng).transpose();
    return m;
}

inline gm::Channels random_channels(int channels, int n, std::mt19937_64& rng) {
    gm::Channels x;
    for (int c = 0; c < channels; ++c) x.push_back(random_vector(n, rng));
    return x;
}

// Group convolution from the defining double sum y(x) = sum_{gh=x} phi(g) psi(h).
inline Eigen::VectorXd group_convolution(const gm::FiniteGroup& group,
                                         const Eigen::VectorXd& phi,
                                         const Eigen::VectorXd& psi) {
    Eigen::VectorXd y = Eigen::VectorXd::Zero(group.order());
    for (gm::ElementId g = 0; g < static_cast<gm::ElementId>(group.order()); ++g)
        for (gm::ElementId h = 0; h < static_cast<gm::ElementId>(group.order()); ++h)
            y(group.mul(g, h)) += phi(g) * psi(h);
    return y;
}

// Multi-channel conv layer evaluated through the double sum, kernel
// coefficients scattered onto full |G| vectors first.
inline gm::Channels conv_layer_oracle(const gm::GmConvLayer& layer, const gm::Channels& x) {
    const int n = layer.n();
    gm::Channels y(layer.out_channels, Eigen::VectorXd::Zero(n));
    for (int o = 0; o < layer.out_channels; ++o)
        for (int i = 0; i < layer.in_channels; ++i) {
            Eigen::VectorXd phi = Eigen::VectorXd::Zero(n);
            for (int s = 0; s < layer.support_size(); ++s)
                phi(layer.support[s]) = layer.w(o, i, s);
            y[o] += group_convolution(*layer.group, phi, x[i]);
        }
    return y;
}

// Classical circular 2-D convolution on an n x n periodic grid:
// y(u,v) = sum_{du,dv} K(du,dv) x(u-du, v-dv).
inline Eigen::MatrixXd circular_conv_2d(const Eigen::MatrixXd& image,
                                        const std::vector<std::array<int, 2>>& offsets,
                                        const Eigen::VectorXd& kernel) {
    const int n = static_cast<int>(image.rows());
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(n, n);
    for (int u = 0; u < n; ++u)
        for (int v = 0; v < n; ++v)
            for (std::size_t s = 0; s < offsets.size(); ++s) {
                int su = ((u - offsets[s][0]) % n + n) % n;
                int sv = ((v - offsets[s][1]) % n + n) % n;
                out(u, v) += kernel(static_cast<Eigen::Index>(s)) * image(su, sv);
            }
    return out;
}

// Zero-padded 1-D convolution: y(i) = sum_d K(d) x(i-d), x read as zero
// outside [0, len).
inline Eigen::VectorXd padded_conv_1d(const Eigen::VectorXd& x, const std::vector<int>& offsets,
                                      const Eigen::VectorXd& kernel) {
    const int n = static_cast<int>(x.size());
    Eigen::VectorXd y = Eigen::VectorXd::Zero(n);
    for (int i = 0; i < n; ++i)
        for (std::size_t s = 0; s < offsets.size(); ++s) {
            int j = i - offsets[s];
            if (j >= 0 && j < n) y(i) += kernel(static_cast<Eigen::Index>(s)) * x(j);
        }
    return y;
}

// Zero-padded 2-D convolution on an nx x ny grid.
inline Eigen::MatrixXd padded_conv_2d(const Eigen::MatrixXd& x,
                                      const std::vector<std::array<int, 2>>& offsets,
                                      const Eigen::VectorXd& kernel) {
    const int nx = static_cast<int>(x.rows()), ny = static_cast<int>(x.cols());
    Eigen::MatrixXd y = Eigen::MatrixXd::Zero(nx, ny);
    for (int u = 0; u < nx; ++u)
        for (int v = 0; v < ny; ++v)
            for (std::size_t s = 0; s < offsets.size(); ++s) {
                int su = u - offsets[s][0], sv = v - offsets[s][1];
                if (su >= 0 && su < nx && sv >= 0 && sv < ny)
                    y(u, v) += kernel(static_cast<Eigen::Index>(s)) * x(su, sv);
            }
    return y;
}

// Homogeneous-space convolution from the defining sum
// (phi * f)([x]) = sum_g phi(g) f([g^{-1} x]).
inline Eigen::VectorXd homspace_conv_oracle(const gm::HomogeneousSpace& space,
                                            const std::vector<gm::ElementId>& support,
                                            const Eigen::VectorXd& phi,
                                            const Eigen::VectorXd& f) {
    const gm::FiniteGroup& g = space.group();
    Eigen::VectorXd out = Eigen::VectorXd::Zero(space.size());
    for (int xi = 0; xi < space.size(); ++xi) {
        gm::ElementId x = space.representatives()[xi];
        for (std::size_t s = 0; s < support.size(); ++s)
            out(xi) += phi(static_cast<Eigen::Index>(s)) *
                       f(space.coset_index(g.mul(g.inv(support[s]), x)));
    }
    return out;
}

// Central finite differences of a scalar function with respect to a
// parameter block, h = 1e-5.
inline std::vector<double> finite_difference(std::vector<double>& params,
                                             const std::function<double()>& loss,
                                             double h = 1e-5) {
    std::vector<double> grad(params.size());
    for (std::size_t i = 0; i < params.size(); ++i) {
        double saved = params[i];
        params[i] = saved + h;
        double up = loss();
        params[i] = saved - h;
        double down = loss();
        params[i] = saved;
        grad[i] = (up - down) / (2.0 * h);
    }
    return grad;
}

inline double relative_error(const std::vector<double>& a, const std::vector<double>& b) {
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        num += (a[i] - b[i]) * (a[i] - b[i]);
        den += b[i] * b[i];
    }
    return std::sqrt(num) / std::max(std::sqrt(den), 1e-12);
}

}  // namespace oracles
