#include "gm/group_matrix.hpp"

#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>

namespace gm {

namespace {

void require_same_group(const GroupMatrix& m, const GroupMatrix& n) {
    if (m.group != n.group)
        throw std::invalid_argument("group mismatch between group matrices");
}

void require_square(const Eigen::MatrixXd& m, const FiniteGroup& group) {
    if (m.rows() != group.order() || m.cols() != group.order())
        throw std::invalid_argument("matrix dimensions do not match the group order");
}

}  // namespace

GroupDiagonal group_diagonal(const FiniteGroup& group, ElementId g) {
    if (g >= static_cast<ElementId>(group.order()))
        throw std::invalid_argument("element id out of range");
    GroupDiagonal b{&group, g, std::vector<ElementId>(group.order())};
    ElementId ginv = group.inv(g);
    for (ElementId h = 0; h < static_cast<ElementId>(group.order()); ++h)
        b.col_of_row[h] = group.mul(ginv, h);
    return b;
}

Eigen::MatrixXd densify(const GroupDiagonal& b) {
    const int n = b.group->order();
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
    for (int h = 0; h < n; ++h) m(h, b.col_of_row[h]) = 1.0;
    return m;
}

Eigen::VectorXd apply(const GroupDiagonal& b, const Eigen::VectorXd& x) {
    const int n = b.group->order();
    if (x.size() != n) throw std::invalid_argument("vector length does not match group order");
    Eigen::VectorXd y(n);
    for (int h = 0; h < n; ++h) y(h) = x(b.col_of_row[h]);
    return y;
}

GroupMatrix gm_from_coeffs(const FiniteGroup& group, Eigen::VectorXd phi) {
    if (phi.size() != group.order())
        throw std::invalid_argument("coefficient length does not match group order");
    return GroupMatrix{&group, std::move(phi)};
}

Eigen::MatrixXd densify(const GroupMatrix& m) {
    const FiniteGroup& g = *m.group;
    const int n = g.order();
    Eigen::MatrixXd dense(n, n);
    for (ElementId row = 0; row < static_cast<ElementId>(n); ++row)
        for (ElementId col = 0; col < static_cast<ElementId>(n); ++col)
            // M(h, h') = phi(h h'^{-1})
            dense(row, col) = m.coeffs(g.mul(row, g.inv(col)));
    return dense;
}

Eigen::VectorXd apply(const GroupMatrix& m, const Eigen::VectorXd& x) {
    const FiniteGroup& g = *m.group;
    const int n = g.order();
    if (x.size() != n) throw std::invalid_argument("vector length does not match group order");
    Eigen::VectorXd y = Eigen::VectorXd::Zero(n);
    for (ElementId e = 0; e < static_cast<ElementId>(n); ++e) {
        double c = m.coeffs(e);
        if (c == 0.0) continue;
        ElementId einv = g.inv(e);
        for (ElementId h = 0; h < static_cast<ElementId>(n); ++h)
            y(h) += c * x(g.mul(einv, h));
    }
    return y;
}

GroupMatrix gm_transpose(const GroupMatrix& m) {
    const FiniteGroup& g = *m.group;
    Eigen::VectorXd out(g.order());
    for (ElementId e = 0; e < static_cast<ElementId>(g.order()); ++e)
        out(e) = m.coeffs(g.inv(e));
    return GroupMatrix{m.group, std::move(out)};
}

GroupMatrix gm_multiply(const GroupMatrix& m, const GroupMatrix& n) {
    require_same_group(m, n);
    const FiniteGroup& g = *m.group;
    Eigen::VectorXd out = Eigen::VectorXd::Zero(g.order());
    for (ElementId a = 0; a < static_cast<ElementId>(g.order()); ++a)
        for (ElementId b = 0; b < static_cast<ElementId>(g.order()); ++b)
            out(g.mul(a, b)) += m.coeffs(a) * n.coeffs(b);
    return GroupMatrix{m.group, std::move(out)};
}

double frobenius_condition_estimate(const Eigen::MatrixXd& m) {
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(m);
    Eigen::MatrixXd inv = lu.inverse();
    if (!inv.allFinite()) return std::numeric_limits<double>::infinity();
    return m.norm() * inv.norm();
}

GroupMatrix gm_inverse(const GroupMatrix& m, double max_condition) {
    const FiniteGroup& g = *m.group;
    Eigen::MatrixXd dense = densify(m);
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(dense);
    Eigen::MatrixXd inv = lu.inverse();
    if (!inv.allFinite())
        throw std::runtime_error("no inverse: matrix is singular");
    double cond = dense.norm() * inv.norm();
    if (!(cond <= max_condition))
        throw std::runtime_error("no inverse: condition number estimate too large");

    GroupMatrixCheck check = is_group_matrix(inv, g, 1e-8 * cond);
    if (!check.ok)
        throw std::runtime_error("no inverse: dense inverse is not a group matrix to tolerance");
    // Re-read coefficients as the per-pattern mean.
    Eigen::VectorXd phi = Eigen::VectorXd::Zero(g.order());
    for (ElementId e = 0; e < static_cast<ElementId>(g.order()); ++e) {
        ElementId einv = g.inv(e);
        double sum = 0.0;
        for (ElementId h = 0; h < static_cast<ElementId>(g.order()); ++h)
            sum += inv(h, g.mul(einv, h));
        phi(e) = sum / g.order();
    }
    return GroupMatrix{m.group, std::move(phi)};
}

GroupMatrix gm_kronecker(const GroupMatrix& m, const GroupMatrix& n,
                         const FiniteGroup& product_group) {
    const FiniteGroup& g = *m.group;
    const FiniteGroup& h = *n.group;
    const int ng = g.order(), nh = h.order();
    if (product_group.order() != ng * nh)
        throw std::invalid_argument("group mismatch: product group has wrong order");
    // Spot-check that the supplied group really is the direct product in
    // (g,h) -> g|H|+h coordinates: exhaustive when small, sampled above.
    auto check_pair = [&](ElementId a1, ElementId b1, ElementId a2, ElementId b2) {
        ElementId lhs = product_group.mul(a1 * nh + b1, a2 * nh + b2);
        ElementId rhs = g.mul(a1, a2) * nh + h.mul(b1, b2);
        if (lhs != rhs)
            throw std::invalid_argument(
                "group mismatch: supplied group is not the direct product");
    };
    if (ng * nh <= 64) {
        for (ElementId a1 = 0; a1 < static_cast<ElementId>(ng); ++a1)
            for (ElementId b1 = 0; b1 < static_cast<ElementId>(nh); ++b1)
                for (ElementId a2 = 0; a2 < static_cast<ElementId>(ng); ++a2)
                    for (ElementId b2 = 0; b2 < static_cast<ElementId>(nh); ++b2)
                        check_pair(a1, b1, a2, b2);
    } else {
        std::mt19937_64 rng(0x715febull);
        std::uniform_int_distribution<ElementId> pg(0, static_cast<ElementId>(ng - 1));
        std::uniform_int_distribution<ElementId> ph(0, static_cast<ElementId>(nh - 1));
        for (int t = 0; t < 1000; ++t) check_pair(pg(rng), ph(rng), pg(rng), ph(rng));
    }

    Eigen::VectorXd out(ng * nh);
    for (int a = 0; a < ng; ++a)
        for (int b = 0; b < nh; ++b) out(a * nh + b) = m.coeffs(a) * n.coeffs(b);
    return GroupMatrix{&product_group, std::move(out)};
}

GroupDiagonal restrict_to_subgroup(const GroupDiagonal& b, const Subgroup& h) {
    if (&h.parent() != b.group)
        throw std::invalid_argument("group mismatch: subgroup belongs to a different group");
    if (!h.contains(b.g))
        throw std::invalid_argument("invalid restriction: element does not belong to the subgroup");
    const FiniteGroup& sub = h.as_group();
    return group_diagonal(sub, h.local_id(b.g));
}

DiagonalBasisForm F_of(const Eigen::MatrixXd& m, const FiniteGroup& group) {
    require_square(m, group);
    const int n = group.order();
    Eigen::MatrixXd f(n, n);
    for (ElementId g = 0; g < static_cast<ElementId>(n); ++g) {
        ElementId ginv = group.inv(g);
        for (ElementId h = 0; h < static_cast<ElementId>(n); ++h)
            f(g, h) = m(h, group.mul(ginv, h));
    }
    return DiagonalBasisForm{&group, std::move(f)};
}

Eigen::MatrixXd M_of(const DiagonalBasisForm& f) {
    const FiniteGroup& group = *f.group;
    const int n = group.order();
    if (f.F.rows() != n || f.F.cols() != n)
        throw std::invalid_argument("matrix dimensions do not match the group order");
    Eigen::MatrixXd m(n, n);
    for (ElementId row = 0; row < static_cast<ElementId>(n); ++row)
        for (ElementId col = 0; col < static_cast<ElementId>(n); ++col)
            m(row, col) = f.F(group.mul(row, group.inv(col)), row);
    return m;
}

GroupMatrixCheck is_group_matrix(const Eigen::MatrixXd& m, const FiniteGroup& group,
                                 double tol) {
    require_square(m, group);
    const int n = group.order();
    double worst = 0.0;
    for (ElementId g = 0; g < static_cast<ElementId>(n); ++g) {
        ElementId ginv = group.inv(g);
        double lo = std::numeric_limits<double>::infinity();
        double hi = -std::numeric_limits<double>::infinity();
        for (ElementId h = 0; h < static_cast<ElementId>(n); ++h) {
            double v = m(h, group.mul(ginv, h));
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
        worst = std::max(worst, hi - lo);
    }
    return GroupMatrixCheck{worst <= tol, worst};
}

}  // namespace gm
