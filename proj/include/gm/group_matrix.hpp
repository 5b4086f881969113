#pragma once

#include <Eigen/Dense>
#include <vector>

#include "gm/group.hpp"

namespace gm {

/// The sparse permutation matrix B_g with (B_g)_{h,h'} = 1 iff h = g h',
/// stored as the per-row column index h' = g^{-1} h. Applying it to a
/// vector is the gather (B_g x)_h = x_{g^{-1} h}.
struct GroupDiagonal {
    const FiniteGroup* group;
    ElementId g;
    std::vector<ElementId> col_of_row;
};

GroupDiagonal group_diagonal(const FiniteGroup& group, ElementId g);
Eigen::MatrixXd densify(const GroupDiagonal& b);
Eigen::VectorXd apply(const GroupDiagonal& b, const Eigen::VectorXd& x);

/// A group matrix M = sum_g phi(g) B_g, represented by its coefficient
/// vector phi over G. Its dense form has constant entries along each
/// group-diagonal pattern, and M x is the group convolution phi * x.
struct GroupMatrix {
    const FiniteGroup* group;
    Eigen::VectorXd coeffs;
};

GroupMatrix gm_from_coeffs(const FiniteGroup& group, Eigen::VectorXd phi);
Eigen::MatrixXd densify(const GroupMatrix& m);
Eigen::VectorXd apply(const GroupMatrix& m, const Eigen::VectorXd& x);

/// Transpose in coefficient space: phi^T(g) = phi(g^{-1}).
GroupMatrix gm_transpose(const GroupMatrix& m);

/// Product in coefficient space: the group convolution
/// (phi * psi)(x) = sum_{gh=x} phi(g) psi(h).
GroupMatrix gm_multiply(const GroupMatrix& m, const GroupMatrix& n);

/// Inverse computed densely (partial-pivot LU), then re-read as
/// coefficients. Throws when the matrix is singular or its estimated
/// condition number exceeds max_condition, and when the recovered dense
/// inverse deviates from a group matrix by more than 1e-8 * condition.
GroupMatrix gm_inverse(const GroupMatrix& m, double max_condition = 1e12);

/// ||M||_F * ||M^{-1}||_F, an upper estimate of the 2-norm condition
/// number. Returns +inf when M is numerically singular.
double frobenius_condition_estimate(const Eigen::MatrixXd& m);

/// Kronecker product of group matrices, living over the direct product
/// group (which the caller supplies, built with direct_product and using
/// the same (g,h) -> g|H|+h element ids).
GroupMatrix gm_kronecker(const GroupMatrix& m, const GroupMatrix& n,
                         const FiniteGroup& product_group);

/// Restriction of B_g (g in H) to the rows/columns indexed by H, which is
/// the H-group diagonal of g by the subgroup-diagonal lemma. The returned
/// diagonal lives over h.as_group(); keep the subgroup alive while using it.
GroupDiagonal restrict_to_subgroup(const GroupDiagonal& b, const Subgroup& h);

/// The reshuffle of a dense |G|x|G| matrix into group-diagonal
/// coordinates: row g of F lists the coefficients multiplying B_g, i.e.
///   F(g, h) = M(h, g^{-1} h),   so that   M = sum_g diag(F_g) B_g.
/// M has constant rows of F exactly when it is a group matrix.
struct DiagonalBasisForm {
    const FiniteGroup* group;
    Eigen::MatrixXd F;
};

DiagonalBasisForm F_of(const Eigen::MatrixXd& m, const FiniteGroup& group);
Eigen::MatrixXd M_of(const DiagonalBasisForm& f);

struct GroupMatrixCheck {
    bool ok;                // all group-diagonal patterns constant within tol
    double max_deviation;   // largest entry spread over any pattern
};

GroupMatrixCheck is_group_matrix(const Eigen::MatrixXd& m, const FiniteGroup& group,
                                 double tol = 1e-10);

}  // namespace gm
