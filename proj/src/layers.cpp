#include "gm/layers.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace gm {

int max_threads() {
#ifdef _OPENMP
    return omp_get_max_threads();
#else
    return 1;
#endif
}

Eigen::VectorXd translate(const FiniteGroup& group, ElementId g, const Eigen::VectorXd& x) {
    const int n = group.order();
    if (x.size() != n) throw std::invalid_argument("vector length does not match group order");
    Eigen::VectorXd y(n);
    for (ElementId h = 0; h < static_cast<ElementId>(n); ++h) y(h) = x(group.mul(h, g));
    return y;
}

Channels translate(const FiniteGroup& group, ElementId g, const Channels& x) {
    Channels y;
    y.reserve(x.size());
    for (const auto& c : x) y.push_back(translate(group, g, c));
    return y;
}

GmConvLayer make_conv_layer(const FiniteGroup& group, int radius, int in_channels,
                            int out_channels, ErrorKind kind, int ldr_rank,
                            std::mt19937_64* rng) {
    if (radius < 0) throw std::invalid_argument("radius must be non-negative");
    if (in_channels <= 0 || out_channels <= 0)
        throw std::invalid_argument("channel counts must be positive");
    GmConvLayer layer;
    layer.group = &group;
    layer.radius = radius;
    layer.support = word_ball(group, radius);
    layer.in_channels = in_channels;
    layer.out_channels = out_channels;
    layer.error_kind = kind;

    const int n = group.order();
    const int s_count = layer.support_size();
    layer.weights.assign(static_cast<std::size_t>(out_channels) * in_channels * s_count, 0.0);
    if (rng) {
        double bound = std::sqrt(1.0 / (static_cast<double>(in_channels) * s_count));
        std::uniform_real_distribution<double> dist(-bound, bound);
        for (double& w : layer.weights) w = dist(*rng);
    }

    if (kind == ErrorKind::FullF) {
        layer.error_full.assign(
            static_cast<std::size_t>(out_channels) * in_channels * s_count * n, 0.0);
    } else if (kind == ErrorKind::Ldr) {
        if (ldr_rank <= 0 || ldr_rank >= n)
            throw std::invalid_argument("ldr rank must satisfy 0 < r < |G|");
        if (rng) {
            std::vector<ElementId> ids(n);
            for (int i = 0; i < n; ++i) ids[i] = static_cast<ElementId>(i);
            std::shuffle(ids.begin(), ids.end(), *rng);
            layer.ldr_positions.assign(ids.begin(), ids.begin() + ldr_rank);
            std::sort(layer.ldr_positions.begin(), layer.ldr_positions.end());
        } else {
            for (int j = 0; j < ldr_rank; ++j)
                layer.ldr_positions.push_back(static_cast<ElementId>(j));
        }
        layer.error_ldr.assign(
            static_cast<std::size_t>(out_channels) * in_channels * ldr_rank * n, 0.0);
    } else if (ldr_rank != 0) {
        throw std::invalid_argument("ldr rank given without the ldr error kind");
    }

    layer.gather.resize(static_cast<std::size_t>(s_count) * n);
    layer.scatter.resize(static_cast<std::size_t>(s_count) * n);
    for (int s = 0; s < s_count; ++s) {
        ElementId g = layer.support[s];
        ElementId ginv = group.inv(g);
        for (ElementId h = 0; h < static_cast<ElementId>(n); ++h) {
            layer.gather[static_cast<std::size_t>(s) * n + h] = group.mul(ginv, h);
            layer.scatter[static_cast<std::size_t>(s) * n + h] = group.mul(g, h);
        }
    }
    layer.ldr_pos_of.assign(n, -1);
    const int r = layer.ldr_rank();
    layer.ldr_gather.resize(static_cast<std::size_t>(r) * n);
    layer.ldr_back.resize(static_cast<std::size_t>(r) * n);
    for (int j = 0; j < r; ++j) {
        ElementId p = layer.ldr_positions[j];
        layer.ldr_pos_of[p] = j;
        for (ElementId e = 0; e < static_cast<ElementId>(n); ++e) {
            layer.ldr_gather[static_cast<std::size_t>(j) * n + e] = group.mul(group.inv(e), p);
            layer.ldr_back[static_cast<std::size_t>(j) * n + e] = group.mul(p, group.inv(e));
        }
    }
    return layer;
}

Eigen::MatrixXd conv_channel_matrix(const GmConvLayer& layer, int o, int i) {
    const int n = layer.n();
    const int s_count = layer.support_size();
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
    for (int s = 0; s < s_count; ++s)
        for (int h = 0; h < n; ++h) {
            double v = layer.w(o, i, s);
            if (layer.error_kind == ErrorKind::FullF)
                v += layer.error_full[((static_cast<std::size_t>(o) * layer.in_channels + i) *
                                           s_count +
                                       s) *
                                          n +
                                      h];
            m(h, layer.gather[static_cast<std::size_t>(s) * n + h]) += v;
        }
    for (int j = 0; j < layer.ldr_rank(); ++j) {
        ElementId p = layer.ldr_positions[j];
        for (int g = 0; g < n; ++g)
            m(p, layer.ldr_gather[static_cast<std::size_t>(j) * n + g]) +=
                layer.error_ldr[((static_cast<std::size_t>(o) * layer.in_channels + i) *
                                     layer.ldr_rank() +
                                 j) *
                                    n +
                                g];
    }
    return m;
}

namespace {

void check_conv_input(const GmConvLayer& layer, const Channels& x) {
    if (static_cast<int>(x.size()) != layer.in_channels)
        throw std::invalid_argument("channel count mismatch in conv input");
    for (const auto& c : x)
        if (c.size() != layer.n())
            throw std::invalid_argument("signal length does not match group order");
}

}  // namespace

Channels conv_forward(const GmConvLayer& layer, const Channels& x, Exec exec) {
    check_conv_input(layer, x);
    const int n = layer.n();
    const int s_count = layer.support_size();
    const int in = layer.in_channels, out = layer.out_channels;
    const int r = layer.ldr_rank();
    Channels y(out, Eigen::VectorXd::Zero(n));

#pragma omp parallel for collapse(2) schedule(static) if (exec == Exec::Parallel)
    for (int o = 0; o < out; ++o)
        for (int h = 0; h < n; ++h) {
            double acc = 0.0;
            for (int i = 0; i < in; ++i) {
                const double* xi = x[i].data();
                for (int s = 0; s < s_count; ++s) {
                    double v = layer.w(o, i, s);
                    if (layer.error_kind == ErrorKind::FullF)
                        v += layer.error_full[((static_cast<std::size_t>(o) * in + i) * s_count +
                                               s) *
                                                  n +
                                              h];
                    acc += v * xi[layer.gather[static_cast<std::size_t>(s) * n + h]];
                }
                if (r > 0 && layer.ldr_pos_of[h] >= 0) {
                    int j = layer.ldr_pos_of[h];
                    const double* a =
                        &layer.error_ldr[((static_cast<std::size_t>(o) * in + i) * r + j) * n];
                    for (int g = 0; g < n; ++g)
                        acc += a[g] * xi[layer.ldr_gather[static_cast<std::size_t>(j) * n + g]];
                }
            }
            y[o](h) = acc;
        }
    return y;
}

ConvGrads conv_backward(const GmConvLayer& layer, const Channels& x, const Channels& dy,
                        Exec exec) {
    check_conv_input(layer, x);
    if (static_cast<int>(dy.size()) != layer.out_channels)
        throw std::invalid_argument("channel count mismatch in conv gradient");
    for (const auto& c : dy)
        if (c.size() != layer.n())
            throw std::invalid_argument("gradient length does not match group order");

    const int n = layer.n();
    const int s_count = layer.support_size();
    const int in = layer.in_channels, out = layer.out_channels;
    const int r = layer.ldr_rank();

    ConvGrads grads;
    grads.dw.assign(layer.weights.size(), 0.0);
    grads.derror_full.assign(layer.error_full.size(), 0.0);
    grads.derror_ldr.assign(layer.error_ldr.size(), 0.0);
    grads.dx.assign(in, Eigen::VectorXd::Zero(n));

    // dw[o][i][s] = <B_{g_s} x_i, dy_o>
#pragma omp parallel for collapse(2) schedule(static) if (exec == Exec::Parallel)
    for (int o = 0; o < out; ++o)
        for (int i = 0; i < in; ++i) {
            const double* xi = x[i].data();
            const double* dyo = dy[o].data();
            for (int s = 0; s < s_count; ++s) {
                double acc = 0.0;
                for (int h = 0; h < n; ++h) {
                    double xv = xi[layer.gather[static_cast<std::size_t>(s) * n + h]];
                    acc += dyo[h] * xv;
                    if (layer.error_kind == ErrorKind::FullF)
                        grads.derror_full[((static_cast<std::size_t>(o) * in + i) * s_count + s) *
                                              n +
                                          h] = dyo[h] * xv;
                }
                grads.dw[(static_cast<std::size_t>(o) * in + i) * s_count + s] = acc;
            }
            for (int j = 0; j < r; ++j) {
                ElementId p = layer.ldr_positions[j];
                double* da =
                    &grads.derror_ldr[((static_cast<std::size_t>(o) * in + i) * r + j) * n];
                for (int g = 0; g < n; ++g)
                    da[g] = dyo[p] * xi[layer.ldr_gather[static_cast<std::size_t>(j) * n + g]];
            }
        }

    // dx_i = sum_o M_{oi}^T dy_o, using B_g^T = B_{g^{-1}}.
#pragma omp parallel for collapse(2) schedule(static) if (exec == Exec::Parallel)
    for (int i = 0; i < in; ++i)
        for (int c = 0; c < n; ++c) {
            double acc = 0.0;
            for (int o = 0; o < out; ++o) {
                const double* dyo = dy[o].data();
                for (int s = 0; s < s_count; ++s) {
                    ElementId h = layer.scatter[static_cast<std::size_t>(s) * n + c];
                    double v = layer.w(o, i, s);
                    if (layer.error_kind == ErrorKind::FullF)
                        v += layer.error_full[((static_cast<std::size_t>(o) * in + i) * s_count +
                                               s) *
                                                  n +
                                              h];
                    acc += v * dyo[h];
                }
                for (int j = 0; j < r; ++j) {
                    ElementId p = layer.ldr_positions[j];
                    acc += layer.error_ldr[((static_cast<std::size_t>(o) * in + i) * r + j) * n +
                                           layer.ldr_back[static_cast<std::size_t>(j) * n + c]] *
                           dyo[p];
                }
            }
            grads.dx[i](c) = acc;
        }
    return grads;
}

GmPoolLayer make_pool_layer(const FiniteGroup& group, const Subgroup& subgroup, PoolMode mode,
                            int channels) {
    if (channels <= 0) throw std::invalid_argument("channel count must be positive");
    if (&subgroup.parent() != &group)
        throw std::invalid_argument("group mismatch: subgroup belongs to a different group");
    return GmPoolLayer{right_cosets(group, subgroup), mode, channels};
}

namespace {

void check_pool_input(const GmPoolLayer& layer, const Channels& x) {
    if (static_cast<int>(x.size()) != layer.channels)
        throw std::invalid_argument("channel count mismatch in pool input");
    const int n = layer.partition.subgroup.parent().order();
    for (const auto& c : x)
        if (c.size() != n)
            throw std::invalid_argument("signal length does not match group order");
}

// Argmax over a block with ties broken toward the smallest element id.
ElementId block_argmax(const std::vector<ElementId>& block, const Eigen::VectorXd& x) {
    ElementId best = block[0];
    for (ElementId e : block)
        if (x(e) > x(best) || (x(e) == x(best) && e < best)) best = e;
    return best;
}

}  // namespace

Channels pool_forward(const GmPoolLayer& layer, const Channels& x, Exec exec) {
    check_pool_input(layer, x);
    const int out_n = layer.partition.subgroup.order();
    Channels y(layer.channels, Eigen::VectorXd::Zero(out_n));
#pragma omp parallel for collapse(2) schedule(static) if (exec == Exec::Parallel)
    for (int c = 0; c < layer.channels; ++c)
        for (int h = 0; h < out_n; ++h) {
            const auto& block = layer.partition.partitions[h];
            if (layer.mode == PoolMode::Mean) {
                double acc = 0.0;
                for (ElementId e : block) acc += x[c](e);
                y[c](h) = acc / static_cast<double>(block.size());
            } else {
                y[c](h) = x[c](block_argmax(block, x[c]));
            }
        }
    return y;
}

Channels pool_backward(const GmPoolLayer& layer, const Channels& x, const Channels& dy,
                       Exec exec) {
    check_pool_input(layer, x);
    const int out_n = layer.partition.subgroup.order();
    const int in_n = layer.partition.subgroup.parent().order();
    if (static_cast<int>(dy.size()) != layer.channels)
        throw std::invalid_argument("channel count mismatch in pool gradient");
    Channels dx(layer.channels, Eigen::VectorXd::Zero(in_n));
    // Blocks partition the group, so the scatter below is race-free.
#pragma omp parallel for collapse(2) schedule(static) if (exec == Exec::Parallel)
    for (int c = 0; c < layer.channels; ++c)
        for (int h = 0; h < out_n; ++h) {
            const auto& block = layer.partition.partitions[h];
            if (layer.mode == PoolMode::Mean) {
                double share = dy[c](h) / static_cast<double>(block.size());
                for (ElementId e : block) dx[c](e) += share;
            } else {
                dx[c](block_argmax(block, x[c])) += dy[c](h);
            }
        }
    return dx;
}

StrideLayer make_stride_layer(Subgroup subgroup, GmConvLayer conv) {
    if (&subgroup.parent() != conv.group)
        throw std::invalid_argument("group mismatch: subgroup belongs to a different group");
    if (conv.error_kind != ErrorKind::None)
        throw std::invalid_argument("strided conv must be error-free");
    StrideLayer layer{std::move(subgroup), std::move(conv), {}, {}};
    const FiniteGroup& g = *layer.conv.group;
    const int n = g.order();
    const int m = layer.subgroup.order();
    const int s_count = layer.conv.support_size();
    layer.rgather.resize(static_cast<std::size_t>(s_count) * m);
    layer.sback.assign(static_cast<std::size_t>(s_count) * n, -1);
    for (int s = 0; s < s_count; ++s) {
        ElementId e = layer.conv.support[s];
        ElementId einv = g.inv(e);
        for (int t = 0; t < m; ++t)
            layer.rgather[static_cast<std::size_t>(s) * m + t] =
                g.mul(einv, layer.subgroup.parent_id(t));
        for (ElementId c = 0; c < static_cast<ElementId>(n); ++c) {
            ElementId h = g.mul(e, c);
            if (layer.subgroup.contains(h))
                layer.sback[static_cast<std::size_t>(s) * n + c] =
                    static_cast<int>(layer.subgroup.local_id(h));
        }
    }
    return layer;
}

Channels stride_forward(const StrideLayer& layer, const Channels& x, Exec exec) {
    check_conv_input(layer.conv, x);
    const int m = layer.subgroup.order();
    const int in = layer.conv.in_channels, out = layer.conv.out_channels;
    const int s_count = layer.conv.support_size();
    Channels y(out, Eigen::VectorXd::Zero(m));
#pragma omp parallel for collapse(2) schedule(static) if (exec == Exec::Parallel)
    for (int o = 0; o < out; ++o)
        for (int t = 0; t < m; ++t) {
            double acc = 0.0;
            for (int i = 0; i < in; ++i)
                for (int s = 0; s < s_count; ++s)
                    acc += layer.conv.w(o, i, s) *
                           x[i](layer.rgather[static_cast<std::size_t>(s) * m + t]);
            y[o](t) = acc;
        }
    return y;
}

StrideGrads stride_backward(const StrideLayer& layer, const Channels& x, const Channels& dy,
                            Exec exec) {
    check_conv_input(layer.conv, x);
    const int n = layer.conv.n();
    const int m = layer.subgroup.order();
    const int in = layer.conv.in_channels, out = layer.conv.out_channels;
    const int s_count = layer.conv.support_size();

    StrideGrads grads;
    grads.dw.assign(layer.conv.weights.size(), 0.0);
    grads.dx.assign(in, Eigen::VectorXd::Zero(n));

#pragma omp parallel for collapse(2) schedule(static) if (exec == Exec::Parallel)
    for (int o = 0; o < out; ++o)
        for (int i = 0; i < in; ++i)
            for (int s = 0; s < s_count; ++s) {
                double acc = 0.0;
                for (int t = 0; t < m; ++t)
                    acc += dy[o](t) * x[i](layer.rgather[static_cast<std::size_t>(s) * m + t]);
                grads.dw[(static_cast<std::size_t>(o) * in + i) * s_count + s] = acc;
            }

#pragma omp parallel for collapse(2) schedule(static) if (exec == Exec::Parallel)
    for (int i = 0; i < in; ++i)
        for (int c = 0; c < n; ++c) {
            double acc = 0.0;
            for (int o = 0; o < out; ++o)
                for (int s = 0; s < s_count; ++s) {
                    int t = layer.sback[static_cast<std::size_t>(s) * n + c];
                    if (t >= 0) acc += layer.conv.w(o, i, s) * dy[o](t);
                }
            grads.dx[i](c) = acc;
        }
    return grads;
}

HomSpaceConvLayer make_homspace_conv(const HomogeneousSpace& space, int radius,
                                     Eigen::VectorXd coeffs) {
    HomSpaceConvLayer layer;
    layer.space = &space;
    layer.support = word_ball(space.group(), radius);
    if (coeffs.size() != static_cast<Eigen::Index>(layer.support.size()))
        throw std::invalid_argument("kernel coefficient count does not match the support");
    layer.coeffs = std::move(coeffs);
    const int xs = space.size();
    layer.target.resize(layer.support.size() * static_cast<std::size_t>(xs));
    for (std::size_t s = 0; s < layer.support.size(); ++s)
        for (int y = 0; y < xs; ++y) {
            ElementId gy = space.group().mul(layer.support[s], space.representatives()[y]);
            layer.target[s * xs + y] = space.coset_index(gy);
        }
    return layer;
}

Eigen::VectorXd homspace_conv_forward(const HomSpaceConvLayer& layer,
                                      const Eigen::VectorXd& f) {
    const int xs = layer.space->size();
    if (f.size() != xs)
        throw std::invalid_argument("input length does not match the homogeneous space");
    Eigen::VectorXd out = Eigen::VectorXd::Zero(xs);
    for (std::size_t s = 0; s < layer.support.size(); ++s)
        for (int y = 0; y < xs; ++y)
            out(layer.target[s * xs + y]) += layer.coeffs(static_cast<Eigen::Index>(s)) * f(y);
    return out;
}

double equivariance_error(const ChannelMap& map, const FiniteGroup& group,
                          const std::vector<Channels>& samples, double eps) {
    if (samples.empty()) return 0.0;
    double total = 0.0;
    std::size_t count = 0;
    for (const Channels& x : samples) {
        Channels fx = map(x);
        for (ElementId g = 0; g < static_cast<ElementId>(group.order()); ++g) {
            Channels lhs = map(translate(group, g, x));
            Channels rhs = translate(group, g, fx);
            double num = 0.0, den = 0.0;
            for (std::size_t c = 0; c < lhs.size(); ++c) {
                num += (lhs[c] - rhs[c]).squaredNorm();
                den += lhs[c].squaredNorm();
            }
            total += std::sqrt(num) / std::max(std::sqrt(den), eps);
            ++count;
        }
    }
    return total / static_cast<double>(count);
}

namespace reference {

Channels conv_forward(const GmConvLayer& layer, const Channels& x) {
    check_conv_input(layer, x);
    Channels y(layer.out_channels, Eigen::VectorXd::Zero(layer.n()));
    for (int o = 0; o < layer.out_channels; ++o)
        for (int i = 0; i < layer.in_channels; ++i)
            y[o] += conv_channel_matrix(layer, o, i) * x[i];
    return y;
}

ConvGrads conv_backward(const GmConvLayer& layer, const Channels& x, const Channels& dy) {
    check_conv_input(layer, x);
    const int n = layer.n();
    const int s_count = layer.support_size();
    ConvGrads grads;
    grads.dw.assign(layer.weights.size(), 0.0);
    grads.derror_full.assign(layer.error_full.size(), 0.0);
    grads.derror_ldr.assign(layer.error_ldr.size(), 0.0);
    grads.dx.assign(layer.in_channels, Eigen::VectorXd::Zero(n));
    for (int o = 0; o < layer.out_channels; ++o)
        for (int i = 0; i < layer.in_channels; ++i) {
            Eigen::VectorXd gathered(n);
            for (int s = 0; s < s_count; ++s) {
                for (int h = 0; h < n; ++h)
                    gathered(h) = x[i](layer.gather[static_cast<std::size_t>(s) * n + h]);
                grads.dw[(static_cast<std::size_t>(o) * layer.in_channels + i) * s_count + s] =
                    dy[o].dot(gathered);
                if (layer.error_kind == ErrorKind::FullF)
                    for (int h = 0; h < n; ++h)
                        grads.derror_full[((static_cast<std::size_t>(o) * layer.in_channels +
                                            i) *
                                               s_count +
                                           s) *
                                              n +
                                          h] = dy[o](h) * gathered(h);
            }
            for (int j = 0; j < layer.ldr_rank(); ++j) {
                ElementId p = layer.ldr_positions[j];
                for (int g = 0; g < n; ++g)
                    grads.derror_ldr[((static_cast<std::size_t>(o) * layer.in_channels + i) *
                                          layer.ldr_rank() +
                                      j) *
                                         n +
                                     g] =
                        dy[o](p) * x[i](layer.ldr_gather[static_cast<std::size_t>(j) * n + g]);
            }
            grads.dx[i] += conv_channel_matrix(layer, o, i).transpose() * dy[o];
        }
    return grads;
}

Channels pool_forward(const GmPoolLayer& layer, const Channels& x) {
    check_pool_input(layer, x);
    const int out_n = layer.partition.subgroup.order();
    Channels y(layer.channels, Eigen::VectorXd::Zero(out_n));
    for (int c = 0; c < layer.channels; ++c)
        for (int h = 0; h < out_n; ++h) {
            const auto& block = layer.partition.partitions[h];
            if (layer.mode == PoolMode::Mean) {
                double acc = 0.0;
                for (ElementId e : block) acc += x[c](e);
                y[c](h) = acc / static_cast<double>(block.size());
            } else {
                y[c](h) = x[c](block_argmax(block, x[c]));
            }
        }
    return y;
}

Channels stride_forward(const StrideLayer& layer, const Channels& x) {
    Channels full = reference::conv_forward(layer.conv, x);
    const int m = layer.subgroup.order();
    Channels y(layer.conv.out_channels, Eigen::VectorXd::Zero(m));
    for (int o = 0; o < layer.conv.out_channels; ++o)
        for (int t = 0; t < m; ++t) y[o](t) = full[o](layer.subgroup.parent_id(t));
    return y;
}

}  // namespace reference

}  // namespace gm
