#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "gm/group_matrix.hpp"

namespace gm {

/// Sylvester-type displacement: A M - M B.
Eigen::MatrixXd sylvester_displacement(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b,
                                       const Eigen::MatrixXd& m);

/// Stein-type displacement: M - A M B.
Eigen::MatrixXd stein_displacement(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b,
                                   const Eigen::MatrixXd& m);

/// Numerical rank from a column-pivoted QR: the number of R-diagonal
/// entries above rel_tol * ||A||_F. A zero (or empty) matrix has rank 0.
int numerical_rank(const Eigen::MatrixXd& a, double rel_tol = 1e-9);

struct DisplacementResult {
    Eigen::MatrixXd residual;
    int rank = 0;
    double rank_tol = 0.0;
};

/// Row-wise cyclic difference: out(g, j) = F(g, j) - F(g, j+1 mod cols).
/// Vanishes exactly on the rows of F that are constant, so it vanishes on
/// all of F iff the source matrix is a group matrix.
Eigen::MatrixXd displacement_residual(const Eigen::MatrixXd& f);

DisplacementResult displacement_D(const DiagonalBasisForm& f);

/// One full-cycle column permutation per row of F.
struct PermutationFamily {
    std::vector<std::vector<ElementId>> sigmas;
};

PermutationFamily random_cycle_family(int rows, int cols, std::uint64_t seed);

/// Per-row shifted difference out(g, j) = F(g, j) - F(g, sigma_g(j)).
/// Each sigma_g must be a single cycle through all columns; anything else
/// raises an invalid-family error (a shorter cycle could vanish on
/// non-constant rows).
DisplacementResult displacement_D_family(const DiagonalBasisForm& f,
                                         const PermutationFamily& family);

/// Rank of the stack of vectorized residuals: the dimension of their span.
int dimension_from_residuals(const std::vector<Eigen::MatrixXd>& residuals,
                             double rel_tol = 1e-9);

/// Displacement dimension of the matrix class spanned by `class_basis`
/// (exact by linearity of the displacement operator).
int displacement_dimension(const FiniteGroup& group,
                           const std::vector<Eigen::MatrixXd>& class_basis,
                           double rel_tol = 1e-9);

struct GmDistance {
    double distance;         // Frobenius distance to the group-matrix set
    GroupMatrix projection;  // the nearest group matrix (per-pattern means)
};

/// Distance of M from the set of G-group matrices, together with the
/// orthogonal projection. Group-diagonal supports are disjoint, so the
/// projection is the closed-form per-pattern mean.
GmDistance distance_to_gm(const Eigen::MatrixXd& m, const FiniteGroup& group);

struct BoundCheck {
    double left;
    double right;
    bool pass;
};

/// dist(M, GM) = dist(M^T, GM), equality within tol.
BoundCheck prop2_transpose(const Eigen::MatrixXd& m, const FiniteGroup& g, double tol = 1e-10);
/// dist(MN, GM) <= max(||M||, ||N||) (dist(M, GM) + dist(N, GM)).
BoundCheck prop2_product(const Eigen::MatrixXd& m, const Eigen::MatrixXd& n,
                         const FiniteGroup& g);
/// Kronecker analogue across G x H.
BoundCheck prop2_kronecker(const Eigen::MatrixXd& m, const FiniteGroup& g,
                           const Eigen::MatrixXd& n, const FiniteGroup& h,
                           const FiniteGroup& product_group);

struct Prop3Report {
    int dim_result;
    int dim_a;
    int dim_b;
    int bound;
    bool pass;
    bool equality;
};

/// Transpose preserves the displacement dimension exactly.
Prop3Report prop3_transpose(const FiniteGroup& g, const std::vector<Eigen::MatrixXd>& basis);
/// dim_D({M + M'}) <= d_M + d_M'; equality is reported, not asserted.
Prop3Report prop3_sum(const FiniteGroup& g, const std::vector<Eigen::MatrixXd>& basis_a,
                      const std::vector<Eigen::MatrixXd>& basis_b);
/// dim_D({M (x) N}) <= d_M + d_N over the product group.
Prop3Report prop3_kronecker(const FiniteGroup& g, const std::vector<Eigen::MatrixXd>& basis_a,
                            const FiniteGroup& h, const std::vector<Eigen::MatrixXd>& basis_b,
                            const FiniteGroup& product_group);

/// A group matrix plus a rank-budgeted error term in diagonal-basis
/// coordinates: F(M) = b 1^T with the column at each position g_i
/// incremented by the free vector a_i. The reconstructed matrix has
/// rank(D(M)) equal to dim span{a_i} (at most r).
struct LdrKernel {
    const FiniteGroup* group;
    Eigen::VectorXd b;
    std::vector<ElementId> positions;
    std::vector<Eigen::VectorXd> a_vectors;
};

/// Assemble the dense matrix M_of(F) and assert the displacement-rank
/// identity rank(D(M)) == dim span{a_i}.
Eigen::MatrixXd ldr_build(const LdrKernel& kernel);

/// Basis of the parametric class with free b and free a-vectors at the
/// given positions: |G| + r|G| matrices. Its displacement dimension is
/// |G| * r.
std::vector<Eigen::MatrixXd> ldr_class_basis(const FiniteGroup& group,
                                             const std::vector<ElementId>& positions);

/// Least-squares extraction of (b, a-vectors) from a dense matrix: b is
/// the per-row mean of F over the non-position columns, and each a_i the
/// residual at column g_i. Recovers ldr_build parameters exactly.
LdrKernel ldr_project_params(const Eigen::MatrixXd& m, const FiniteGroup& group,
                             const std::vector<ElementId>& positions);

}  // namespace gm
