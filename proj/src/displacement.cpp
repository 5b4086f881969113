#include "gm/displacement.hpp"

#include <algorithm>
#include <random>
#include <stdexcept>

namespace gm {

Eigen::MatrixXd sylvester_displacement(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b,
                                       const Eigen::MatrixXd& m) {
    if (a.cols() != m.rows() || m.cols() != b.rows() || a.rows() != m.rows() ||
        b.cols() != m.cols())
        throw std::invalid_argument("shape mismatch in Sylvester displacement");
    return a * m - m * b;
}

Eigen::MatrixXd stein_displacement(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b,
                                   const Eigen::MatrixXd& m) {
    if (a.cols() != m.rows() || m.cols() != b.rows() || a.rows() != m.rows() ||
        b.cols() != m.cols())
        throw std::invalid_argument("shape mismatch in Stein displacement");
    return m - a * m * b;
}

int numerical_rank(const Eigen::MatrixXd& a, double rel_tol) {
    if (a.size() == 0) return 0;
    double scale = a.norm();
    if (scale == 0.0) return 0;
    double tol = rel_tol * scale;
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(a);
    const auto& r = qr.matrixR();
    int limit = static_cast<int>(std::min(a.rows(), a.cols()));
    int rank = 0;
    while (rank < limit && std::abs(r(rank, rank)) > tol) ++rank;
    return rank;
}

Eigen::MatrixXd displacement_residual(const Eigen::MatrixXd& f) {
    const Eigen::Index rows = f.rows(), cols = f.cols();
    Eigen::MatrixXd out(rows, cols);
    for (Eigen::Index g = 0; g < rows; ++g)
        for (Eigen::Index j = 0; j < cols; ++j)
            out(g, j) = f(g, j) - f(g, (j + 1) % cols);
    return out;
}

DisplacementResult displacement_D(const DiagonalBasisForm& f) {
    DisplacementResult result;
    result.residual = displacement_residual(f.F);
    result.rank_tol = 1e-9 * result.residual.norm();
    result.rank = numerical_rank(result.residual);
    return result;
}

PermutationFamily random_cycle_family(int rows, int cols, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    PermutationFamily family;
    family.sigmas.resize(rows);
    std::vector<ElementId> order(cols);
    for (int j = 0; j < cols; ++j) order[j] = static_cast<ElementId>(j);
    for (int g = 0; g < rows; ++g) {
        std::shuffle(order.begin(), order.end(), rng);
        // One full cycle visiting the shuffled order.
        std::vector<ElementId> sigma(cols);
        for (int j = 0; j < cols; ++j) sigma[order[j]] = order[(j + 1) % cols];
        family.sigmas[g] = std::move(sigma);
    }
    return family;
}

namespace {

void validate_full_cycle(const std::vector<ElementId>& sigma) {
    const int n = static_cast<int>(sigma.size());
    std::vector<char> seen(n, 0);
    for (ElementId v : sigma) {
        if (v >= static_cast<ElementId>(n) || seen[v])
            throw std::invalid_argument("invalid family: sigma is not a permutation");
        seen[v] = 1;
    }
    // Must be a single n-cycle: walking from 0 returns after exactly n steps.
    int steps = 0;
    ElementId cur = 0;
    do {
        cur = sigma[cur];
        ++steps;
    } while (cur != 0 && steps <= n);
    if (steps != n)
        throw std::invalid_argument("invalid family: sigma is not a single full cycle");
}

}  // namespace

DisplacementResult displacement_D_family(const DiagonalBasisForm& f,
                                         const PermutationFamily& family) {
    const Eigen::Index rows = f.F.rows(), cols = f.F.cols();
    if (static_cast<Eigen::Index>(family.sigmas.size()) != rows)
        throw std::invalid_argument("invalid family: one permutation per row required");
    for (const auto& sigma : family.sigmas) {
        if (static_cast<Eigen::Index>(sigma.size()) != cols)
            throw std::invalid_argument("invalid family: permutation size mismatch");
        validate_full_cycle(sigma);
    }
    DisplacementResult result;
    result.residual.resize(rows, cols);
    for (Eigen::Index g = 0; g < rows; ++g)
        for (Eigen::Index j = 0; j < cols; ++j)
            result.residual(g, j) = f.F(g, j) - f.F(g, family.sigmas[g][j]);
    result.rank_tol = 1e-9 * result.residual.norm();
    result.rank = numerical_rank(result.residual);
    return result;
}

int dimension_from_residuals(const std::vector<Eigen::MatrixXd>& residuals, double rel_tol) {
    if (residuals.empty()) return 0;
    const Eigen::Index entries = residuals.front().size();
    Eigen::MatrixXd stack(static_cast<Eigen::Index>(residuals.size()), entries);
    for (std::size_t i = 0; i < residuals.size(); ++i) {
        if (residuals[i].size() != entries)
            throw std::invalid_argument("shape mismatch across residuals");
        stack.row(static_cast<Eigen::Index>(i)) =
            Eigen::Map<const Eigen::VectorXd>(residuals[i].data(), entries);
    }
    return numerical_rank(stack, rel_tol);
}

int displacement_dimension(const FiniteGroup& group,
                           const std::vector<Eigen::MatrixXd>& class_basis, double rel_tol) {
    std::vector<Eigen::MatrixXd> residuals;
    residuals.reserve(class_basis.size());
    for (const auto& m : class_basis)
        residuals.push_back(displacement_residual(F_of(m, group).F));
    return dimension_from_residuals(residuals, rel_tol);
}

GmDistance distance_to_gm(const Eigen::MatrixXd& m, const FiniteGroup& group) {
    if (m.rows() != group.order() || m.cols() != group.order())
        throw std::invalid_argument("matrix dimensions do not match the group order");
    const int n = group.order();
    Eigen::VectorXd phi(n);
    double dist_sq = 0.0;
    for (ElementId g = 0; g < static_cast<ElementId>(n); ++g) {
        ElementId ginv = group.inv(g);
        double sum = 0.0;
        for (ElementId h = 0; h < static_cast<ElementId>(n); ++h)
            sum += m(h, group.mul(ginv, h));
        double mean = sum / n;
        phi(g) = mean;
        for (ElementId h = 0; h < static_cast<ElementId>(n); ++h) {
            double d = m(h, group.mul(ginv, h)) - mean;
            dist_sq += d * d;
        }
    }
    return GmDistance{std::sqrt(dist_sq), GroupMatrix{&group, std::move(phi)}};
}

BoundCheck prop2_transpose(const Eigen::MatrixXd& m, const FiniteGroup& g, double tol) {
    double left = distance_to_gm(m, g).distance;
    double right = distance_to_gm(m.transpose(), g).distance;
    return BoundCheck{left, right, std::abs(left - right) <= tol};
}

BoundCheck prop2_product(const Eigen::MatrixXd& m, const Eigen::MatrixXd& n,
                         const FiniteGroup& g) {
    if (m.rows() != n.rows() || m.cols() != n.cols())
        throw std::invalid_argument("shape mismatch between factors");
    double left = distance_to_gm(m * n, g).distance;
    double right = std::max(m.norm(), n.norm()) *
                   (distance_to_gm(m, g).distance + distance_to_gm(n, g).distance);
    return BoundCheck{left, right, left <= right + 1e-12};
}

namespace {

Eigen::MatrixXd kron(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
    Eigen::MatrixXd out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < a.cols(); ++j)
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    return out;
}

}  // namespace

BoundCheck prop2_kronecker(const Eigen::MatrixXd& m, const FiniteGroup& g,
                           const Eigen::MatrixXd& n, const FiniteGroup& h,
                           const FiniteGroup& product_group) {
    if (product_group.order() != g.order() * h.order())
        throw std::invalid_argument("group mismatch: product group has wrong order");
    double left = distance_to_gm(kron(m, n), product_group).distance;
    double right = std::max(m.norm(), n.norm()) *
                   (distance_to_gm(m, g).distance + distance_to_gm(n, h).distance);
    return BoundCheck{left, right, left <= right + 1e-12};
}

Prop3Report prop3_transpose(const FiniteGroup& g, const std::vector<Eigen::MatrixXd>& basis) {
    std::vector<Eigen::MatrixXd> transposed;
    transposed.reserve(basis.size());
    for (const auto& m : basis) transposed.push_back(m.transpose());
    int d = displacement_dimension(g, basis);
    int dt = displacement_dimension(g, transposed);
    return Prop3Report{dt, d, 0, d, dt == d, dt == d};
}

Prop3Report prop3_sum(const FiniteGroup& g, const std::vector<Eigen::MatrixXd>& basis_a,
                      const std::vector<Eigen::MatrixXd>& basis_b) {
    std::vector<Eigen::MatrixXd> joint = basis_a;
    joint.insert(joint.end(), basis_b.begin(), basis_b.end());
    int d = displacement_dimension(g, joint);
    int da = displacement_dimension(g, basis_a);
    int db = displacement_dimension(g, basis_b);
    return Prop3Report{d, da, db, da + db, d <= da + db, d == da + db};
}

Prop3Report prop3_kronecker(const FiniteGroup& g, const std::vector<Eigen::MatrixXd>& basis_a,
                            const FiniteGroup& h, const std::vector<Eigen::MatrixXd>& basis_b,
                            const FiniteGroup& product_group) {
    std::vector<Eigen::MatrixXd> products;
    products.reserve(basis_a.size() * basis_b.size());
    for (const auto& a : basis_a)
        for (const auto& b : basis_b) products.push_back(kron(a, b));
    int d = displacement_dimension(product_group, products);
    int da = displacement_dimension(g, basis_a);
    int db = displacement_dimension(h, basis_b);
    return Prop3Report{d, da, db, da + db, d <= da + db, d == da + db};
}

namespace {

void validate_positions(const FiniteGroup& group, const std::vector<ElementId>& positions) {
    const int n = group.order();
    if (static_cast<int>(positions.size()) >= n)
        throw std::invalid_argument("too many positions: need r < |G|");
    std::vector<char> seen(n, 0);
    for (ElementId p : positions) {
        if (p >= static_cast<ElementId>(n))
            throw std::invalid_argument("position id out of range");
        if (seen[p]) throw std::invalid_argument("duplicate positions");
        seen[p] = 1;
    }
}

Eigen::MatrixXd ldr_assemble_F(const LdrKernel& kernel) {
    const int n = kernel.group->order();
    if (kernel.b.size() != n)
        throw std::invalid_argument("coefficient length does not match group order");
    if (kernel.a_vectors.size() != kernel.positions.size())
        throw std::invalid_argument("one a-vector per position required");
    Eigen::MatrixXd f = kernel.b * Eigen::RowVectorXd::Ones(n);
    for (std::size_t i = 0; i < kernel.positions.size(); ++i) {
        if (kernel.a_vectors[i].size() != n)
            throw std::invalid_argument("a-vector length does not match group order");
        f.col(kernel.positions[i]) += kernel.a_vectors[i];
    }
    return f;
}

}  // namespace

Eigen::MatrixXd ldr_build(const LdrKernel& kernel) {
    validate_positions(*kernel.group, kernel.positions);
    Eigen::MatrixXd f = ldr_assemble_F(kernel);
    Eigen::MatrixXd m = M_of(DiagonalBasisForm{kernel.group, std::move(f)});

    // rank(D(M)) must equal dim span{a_i}.
    int drank = displacement_D(F_of(m, *kernel.group)).rank;
    int arank = 0;
    if (!kernel.a_vectors.empty()) {
        Eigen::MatrixXd a_stack(kernel.group->order(),
                                static_cast<Eigen::Index>(kernel.a_vectors.size()));
        for (std::size_t i = 0; i < kernel.a_vectors.size(); ++i)
            a_stack.col(static_cast<Eigen::Index>(i)) = kernel.a_vectors[i];
        arank = numerical_rank(a_stack);
    }
    if (drank != arank)
        throw std::logic_error("displacement rank does not match the a-vector span");
    return m;
}

std::vector<Eigen::MatrixXd> ldr_class_basis(const FiniteGroup& group,
                                             const std::vector<ElementId>& positions) {
    validate_positions(group, positions);
    const int n = group.order();
    std::vector<Eigen::MatrixXd> basis;
    basis.reserve(static_cast<std::size_t>(n) * (1 + positions.size()));
    for (int g = 0; g < n; ++g) {
        Eigen::MatrixXd f = Eigen::MatrixXd::Zero(n, n);
        f.row(g).setOnes();
        basis.push_back(M_of(DiagonalBasisForm{&group, std::move(f)}));
    }
    for (ElementId p : positions)
        for (int g = 0; g < n; ++g) {
            Eigen::MatrixXd f = Eigen::MatrixXd::Zero(n, n);
            f(g, p) = 1.0;
            basis.push_back(M_of(DiagonalBasisForm{&group, std::move(f)}));
        }
    return basis;
}

LdrKernel ldr_project_params(const Eigen::MatrixXd& m, const FiniteGroup& group,
                             const std::vector<ElementId>& positions) {
    validate_positions(group, positions);
    const int n = group.order();
    Eigen::MatrixXd f = F_of(m, group).F;
    std::vector<char> is_position(n, 0);
    for (ElementId p : positions) is_position[p] = 1;

    LdrKernel kernel{&group, Eigen::VectorXd::Zero(n), positions, {}};
    const int free_cols = n - static_cast<int>(positions.size());
    for (int g = 0; g < n; ++g) {
        double sum = 0.0;
        for (int h = 0; h < n; ++h)
            if (!is_position[h]) sum += f(g, h);
        kernel.b(g) = sum / free_cols;
    }
    for (ElementId p : positions)
        kernel.a_vectors.push_back(f.col(p) - kernel.b);
    return kernel;
}

}  // namespace gm
