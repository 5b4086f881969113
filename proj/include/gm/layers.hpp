#pragma once

#include <Eigen/Dense>
#include <functional>
#include <random>
#include <vector>

#include "gm/group.hpp"
#include "gm/group_matrix.hpp"
#include "gm/parallel.hpp"

namespace gm {

/// Multi-channel signal over a fixed index set: one vector per channel.
using Channels = std::vector<Eigen::VectorXd>;

/// Translation action on signals over G: (g . x)(h) = x(h g). Group
/// matrices commute with exactly this action, so it is the one all
/// equivariance checks use.
Eigen::VectorXd translate(const FiniteGroup& group, ElementId g, const Eigen::VectorXd& x);
Channels translate(const FiniteGroup& group, ElementId g, const Channels& x);

enum class ErrorKind { None, FullF, Ldr };

/// Group-matrix convolution layer. The kernel is supported on the word
/// ball of the given radius; without an error term each channel-pair map
/// is the group matrix sum_s w[o][i][s] B_{g_s}.
///
/// Error terms relax exact equivariance:
///  - FullF adds a free |G|-vector E to each supported row of the
///    diagonal-basis form, i.e. sum_s diag(E[o][i][s]) B_{g_s};
///  - Ldr adds r free column vectors to the diagonal-basis form at fixed
///    positions (equivalently, free rows of the channel map), keeping the
///    displacement rank of every channel pair at most r.
struct GmConvLayer {
    const FiniteGroup* group = nullptr;
    int radius = 0;
    std::vector<ElementId> support;
    int in_channels = 0;
    int out_channels = 0;

    std::vector<double> weights;        // [(o*in + i)*S + s]
    ErrorKind error_kind = ErrorKind::None;
    std::vector<double> error_full;     // [((o*in + i)*S + s)*N + h]
    std::vector<ElementId> ldr_positions;
    std::vector<double> error_ldr;      // [((o*in + i)*r + j)*N + g]

    // Precomputed index maps.
    std::vector<ElementId> gather;      // [s*N + h] = g_s^{-1} h
    std::vector<ElementId> scatter;     // [s*N + c] = g_s c
    std::vector<ElementId> ldr_gather;  // [j*N + g] = g^{-1} p_j
    std::vector<ElementId> ldr_back;    // [j*N + c] = p_j c^{-1}
    std::vector<int> ldr_pos_of;        // [h] = j with p_j == h, else -1

    int n() const { return group->order(); }
    int support_size() const { return static_cast<int>(support.size()); }
    int ldr_rank() const { return static_cast<int>(ldr_positions.size()); }

    double& w(int o, int i, int s) {
        return weights[(static_cast<std::size_t>(o) * in_channels + i) * support.size() + s];
    }
    double w(int o, int i, int s) const {
        return weights[(static_cast<std::size_t>(o) * in_channels + i) * support.size() + s];
    }

    std::size_t param_count() const {
        return weights.size() + error_full.size() + error_ldr.size();
    }
    /// Learnable parameters per (out, in) channel pair; N_k for the plain
    /// layer, i.e. (2k+1)^2 on a product of two cyclic groups.
    std::size_t params_per_channel_pair() const {
        return param_count() / (static_cast<std::size_t>(in_channels) * out_channels);
    }
};

/// Builds a conv layer; weights are Kaiming-uniform on
/// +-sqrt(1/(in_channels * N_k)) when an RNG is supplied (zeros
/// otherwise) and error parameters start at zero, so a fresh layer is
/// exactly equivariant. LDR positions are drawn without replacement when
/// an RNG is supplied, else 0..r-1.
GmConvLayer make_conv_layer(const FiniteGroup& group, int radius, int in_channels,
                            int out_channels, ErrorKind kind = ErrorKind::None,
                            int ldr_rank = 0, std::mt19937_64* rng = nullptr);

/// Dense matrix of the (o, i) channel-pair map, error term included.
Eigen::MatrixXd conv_channel_matrix(const GmConvLayer& layer, int o, int i);

Channels conv_forward(const GmConvLayer& layer, const Channels& x,
                      Exec exec = Exec::Parallel);

struct ConvGrads {
    std::vector<double> dw;
    std::vector<double> derror_full;
    std::vector<double> derror_ldr;
    Channels dx;
};

ConvGrads conv_backward(const GmConvLayer& layer, const Channels& x, const Channels& dy,
                        Exec exec = Exec::Parallel);

enum class PoolMode { Max, Mean };

/// Subgroup pooling: output h (a subgroup element) reads the block
/// P_h = {h * rep_i} of the coset partition. Mean averages the block; max
/// takes the block maximum and routes its gradient to the argmax entry
/// (ties broken toward the smallest element id).
struct GmPoolLayer {
    CosetPartition partition;
    PoolMode mode = PoolMode::Mean;
    int channels = 1;
};

GmPoolLayer make_pool_layer(const FiniteGroup& group, const Subgroup& subgroup, PoolMode mode,
                            int channels);
Channels pool_forward(const GmPoolLayer& layer, const Channels& x, Exec exec = Exec::Parallel);
Channels pool_backward(const GmPoolLayer& layer, const Channels& x, const Channels& dy,
                       Exec exec = Exec::Parallel);

/// Strided convolution: the conv output restricted to subgroup-indexed
/// rows, computed directly with row-pruned gathers (B_g^H). The wrapped
/// conv must be error-free.
struct StrideLayer {
    Subgroup subgroup;
    GmConvLayer conv;
    std::vector<ElementId> rgather;  // [s*|H| + t] = g_s^{-1} member_t
    std::vector<int> sback;          // [s*N + c] = local index of g_s c in H, else -1
};

StrideLayer make_stride_layer(Subgroup subgroup, GmConvLayer conv);
Channels stride_forward(const StrideLayer& layer, const Channels& x,
                        Exec exec = Exec::Parallel);

struct StrideGrads {
    std::vector<double> dw;
    Channels dx;
};

StrideGrads stride_backward(const StrideLayer& layer, const Channels& x, const Channels& dy,
                            Exec exec = Exec::Parallel);

/// Convolution on a homogeneous space X = G/H: out(x) picks up
/// phi(g) f([y]) whenever [g y] = [x], via precomputed coset targets.
struct HomSpaceConvLayer {
    const HomogeneousSpace* space = nullptr;
    std::vector<ElementId> support;
    Eigen::VectorXd coeffs;
    std::vector<int> target;  // [s*|X| + y] = coset index of g_s * rep_y
};

HomSpaceConvLayer make_homspace_conv(const HomogeneousSpace& space, int radius,
                                     Eigen::VectorXd coeffs);
Eigen::VectorXd homspace_conv_forward(const HomSpaceConvLayer& layer,
                                      const Eigen::VectorXd& f);

using ChannelMap = std::function<Channels(const Channels&)>;

/// Normalized equivariance error under the translation action:
/// mean over samples and g of ||map(g.x) - g.map(x)|| / max(||map(g.x)||, eps).
double equivariance_error(const ChannelMap& map, const FiniteGroup& group,
                          const std::vector<Channels>& samples, double eps = 1e-12);

/// Plain serial implementations retained as references for the parallel
/// kernels; the conv reference goes through dense channel-pair matrices
/// rather than index gathers.
namespace reference {

Channels conv_forward(const GmConvLayer& layer, const Channels& x);
ConvGrads conv_backward(const GmConvLayer& layer, const Channels& x, const Channels& dy);
Channels pool_forward(const GmPoolLayer& layer, const Channels& x);
Channels stride_forward(const StrideLayer& layer, const Channels& x);

}  // namespace reference

}  // namespace gm
