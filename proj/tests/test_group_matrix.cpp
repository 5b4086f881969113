#include <random>

#include "doctest.h"
#include "gm/group.hpp"
#include "gm/group_matrix.hpp"

using namespace gm;

namespace {

Eigen::MatrixXd kron(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
    Eigen::MatrixXd out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < a.cols(); ++j)
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    return out;
}

Eigen::VectorXd random_vector(int n, std::mt19937_64& rng) {
    std::normal_distribution<double> dist;
    Eigen::VectorXd v(n);
    for (int i = 0; i < n; ++i) v(i) = dist(rng);
    return v;
}

// Group convolution evaluated directly from its defining double sum:
// y(x) = sum_{g h = x} phi(g) psi(h).
Eigen::VectorXd brute_force_convolution(const FiniteGroup& group, const Eigen::VectorXd& phi,
                                        const Eigen::VectorXd& psi) {
    Eigen::VectorXd y = Eigen::VectorXd::Zero(group.order());
    for (ElementId g = 0; g < static_cast<ElementId>(group.order()); ++g)
        for (ElementId h = 0; h < static_cast<ElementId>(group.order()); ++h)
            y(group.mul(g, h)) += phi(g) * psi(h);
    return y;
}

}  // namespace

TEST_CASE("group diagonals") {
    FiniteGroup c3 = make_cyclic(3);

    GroupDiagonal be = group_diagonal(c3, 0);
    CHECK(densify(be).isIdentity(0.0));

    GroupDiagonal b1 = group_diagonal(c3, 1);
    CHECK(b1.col_of_row == std::vector<ElementId>{2, 0, 1});
    Eigen::MatrixXd expected(3, 3);
    expected << 0, 0, 1, 1, 0, 0, 0, 1, 0;
    CHECK(densify(b1) == expected);

    // Over C_n the dense form of B_1 is the canonical cyclic shift.
    FiniteGroup c5 = make_cyclic(5);
    Eigen::MatrixXd p = Eigen::MatrixXd::Zero(5, 5);
    for (int j = 0; j < 5; ++j) p((j + 1) % 5, j) = 1.0;
    CHECK(densify(group_diagonal(c5, 1)) == p);

    CHECK_THROWS_AS(group_diagonal(c3, 3), std::invalid_argument);

    // Gather application agrees with the dense product.
    std::mt19937_64 rng(7);
    Eigen::VectorXd x = random_vector(3, rng);
    CHECK((apply(b1, x) - densify(b1) * x).norm() == 0.0);
}

TEST_CASE("group diagonal algebra") {
    FiniteGroup d4 = make_dihedral(4);
    for (ElementId g = 0; g < 8; ++g) {
        Eigen::MatrixXd bg = densify(group_diagonal(d4, g));
        // B_g^T = B_{g^-1}
        CHECK((bg.transpose() - densify(group_diagonal(d4, d4.inv(g)))).norm() == 0.0);
        for (ElementId h = 0; h < 8; ++h) {
            Eigen::MatrixXd bh = densify(group_diagonal(d4, h));
            CHECK((bg * bh - densify(group_diagonal(d4, d4.mul(g, h)))).norm() == 0.0);
        }
    }
}

TEST_CASE("group matrices from coefficients") {
    FiniteGroup c4 = make_cyclic(4);
    Eigen::VectorXd delta = Eigen::VectorXd::Zero(4);
    delta(0) = 1.0;
    CHECK(densify(gm_from_coeffs(c4, delta)).isIdentity(0.0));

    // Circulant with first column phi.
    std::mt19937_64 rng(11);
    Eigen::VectorXd phi = random_vector(4, rng);
    Eigen::MatrixXd m = densify(gm_from_coeffs(c4, phi));
    CHECK((m.col(0) - phi).norm() == 0.0);
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) CHECK(m(i, j) == phi((i - j + 4) % 4));

    FiniteGroup d3 = make_dihedral(3);
    Eigen::VectorXd psi = random_vector(6, rng);
    auto check = is_group_matrix(densify(gm_from_coeffs(d3, psi)), d3, 0.0);
    CHECK(check.ok);
    CHECK(check.max_deviation == 0.0);

    CHECK_THROWS_AS(gm_from_coeffs(c4, psi), std::invalid_argument);
}

TEST_CASE("convolution as matrix") {
    std::mt19937_64 rng(23);
    FiniteGroup c8 = make_cyclic(8);
    FiniteGroup d4 = make_dihedral(4);
    FiniteGroup s3 = make_symmetric(3);
    FiniteGroup c3x4 = direct_product(make_cyclic(3), make_cyclic(4));
    for (const FiniteGroup* g : {&c8, &d4, &s3, &c3x4}) {
        for (int trial = 0; trial < 20; ++trial) {
            Eigen::VectorXd phi = random_vector(g->order(), rng);
            Eigen::VectorXd psi = random_vector(g->order(), rng);
            Eigen::VectorXd oracle = brute_force_convolution(*g, phi, psi);
            GroupMatrix m = gm_from_coeffs(*g, phi);
            Eigen::VectorXd via_dense = densify(m) * psi;
            Eigen::VectorXd via_apply = apply(m, psi);
            CHECK((via_dense - oracle).norm() <= 1e-12 * oracle.norm());
            CHECK((via_apply - oracle).norm() <= 1e-12 * oracle.norm());
        }
    }
}

TEST_CASE("group matrix algebra") {
    std::mt19937_64 rng(37);
    FiniteGroup d4 = make_dihedral(4);
    FiniteGroup c3 = make_cyclic(3);
    FiniteGroup product = direct_product(d4, c3);

    for (int trial = 0; trial < 25; ++trial) {
        GroupMatrix m = gm_from_coeffs(d4, random_vector(8, rng));
        GroupMatrix n = gm_from_coeffs(d4, random_vector(8, rng));
        Eigen::MatrixXd dm = densify(m), dn = densify(n);

        // Coefficient-space ops agree with the dense ones.
        CHECK((densify(gm_transpose(m)) - dm.transpose()).norm() <= 1e-12 * dm.norm());
        CHECK((densify(gm_multiply(m, n)) - dm * dn).norm() <=
              1e-12 * (dm * dn).norm() + 1e-14);

        // Dense results of the closure operations are group matrices.
        CHECK(is_group_matrix(dm.transpose(), d4, 1e-10).ok);
        CHECK(is_group_matrix(dm * dn, d4, 1e-10).ok);

        GroupMatrix k = gm_from_coeffs(c3, random_vector(3, rng));
        Eigen::MatrixXd dk = densify(k);
        GroupMatrix mk = gm_kronecker(m, k, product);
        CHECK((densify(mk) - kron(dm, dk)).norm() == 0.0);
        CHECK(is_group_matrix(kron(dm, dk), product, 1e-10).ok);
    }

    // delta_e is its own inverse.
    FiniteGroup c4 = make_cyclic(4);
    Eigen::VectorXd delta = Eigen::VectorXd::Zero(4);
    delta(0) = 1.0;
    GroupMatrix eye = gm_from_coeffs(c4, delta);
    CHECK((gm_inverse(eye).coeffs - delta).norm() == 0.0);

    // Inverse round-trips on a well-conditioned random group matrix.
    Eigen::VectorXd phi = random_vector(8, rng);
    phi(0) += 2.0 * phi.lpNorm<1>();
    GroupMatrix m = gm_from_coeffs(d4, phi);
    GroupMatrix minv = gm_inverse(m);
    CHECK((densify(gm_multiply(m, minv)) - Eigen::MatrixXd::Identity(8, 8)).norm() <= 1e-10);
    CHECK(is_group_matrix(densify(m).inverse(), d4, 1e-10).ok);

    // Singular matrices are rejected.
    GroupMatrix zero = gm_from_coeffs(c4, Eigen::VectorXd::Zero(4));
    CHECK_THROWS_AS(gm_inverse(zero), std::runtime_error);
    // Condition-number guard.
    CHECK_THROWS_AS(gm_inverse(m, 1.0), std::runtime_error);

    FiniteGroup c8 = make_cyclic(8);
    GroupMatrix other = gm_from_coeffs(c8, random_vector(8, rng));
    CHECK_THROWS_AS(gm_multiply(m, other), std::invalid_argument);
}

TEST_CASE("kronecker of shift diagonals") {
    FiniteGroup c2 = make_cyclic(2);
    FiniteGroup c2x2 = direct_product(c2, c2);
    Eigen::VectorXd d1 = Eigen::VectorXd::Zero(2);
    d1(1) = 1.0;
    GroupMatrix b1 = gm_from_coeffs(c2, d1);
    GroupMatrix prod = gm_kronecker(b1, b1, c2x2);
    // Equals the group diagonal of (1,1) in C2 x C2.
    CHECK((densify(prod) - densify(group_diagonal(c2x2, 1 * 2 + 1))).norm() == 0.0);
    Eigen::MatrixXd expected(4, 4);
    expected << 0, 0, 0, 1, 0, 0, 1, 0, 0, 1, 0, 0, 1, 0, 0, 0;
    CHECK(densify(prod) == expected);
}

TEST_CASE("diagonals restrict to subgroups") {
    FiniteGroup c4 = make_cyclic(4);
    FiniteGroup g = direct_product(c4, c4);
    Subgroup h = Subgroup::from_generators(g, {2 * 4 + 0, 0 * 4 + 2});

    // Identity restricts to the identity.
    GroupDiagonal be = group_diagonal(g, g.identity());
    CHECK(densify(restrict_to_subgroup(be, h)).isIdentity(0.0));

    // Lemma: rows of B_g labeled by H have their 1-entries inside H, so
    // the submatrix is the H-group diagonal. H here is C2 x C2 with local
    // ids matching (a/2)*2 + b/2.
    GroupDiagonal b20 = group_diagonal(g, 2 * 4 + 0);
    for (ElementId h_row : h.member_ids()) CHECK(h.contains(b20.col_of_row[h_row]));
    FiniteGroup c2 = make_cyclic(2);
    FiniteGroup c2x2 = direct_product(c2, c2);
    GroupDiagonal restricted = restrict_to_subgroup(b20, h);
    CHECK(restricted.col_of_row == group_diagonal(c2x2, 1 * 2 + 0).col_of_row);

    // Dense cross-check: removing rows/columns outside H reproduces it.
    Eigen::MatrixXd dense = densify(b20);
    Eigen::MatrixXd sub(h.order(), h.order());
    for (int i = 0; i < h.order(); ++i)
        for (int j = 0; j < h.order(); ++j)
            sub(i, j) = dense(h.parent_id(i), h.parent_id(j));
    CHECK((sub - densify(restricted)).norm() == 0.0);

    // Rotation subgroup of D4 matches C4.
    FiniteGroup d4 = make_dihedral(4);
    Subgroup rot = Subgroup::from_generators(d4, {1});
    GroupDiagonal br = group_diagonal(d4, 1);
    CHECK(restrict_to_subgroup(br, rot).col_of_row ==
          group_diagonal(make_cyclic(4), 1).col_of_row);

    // g outside H is an invalid restriction.
    CHECK_THROWS_AS(restrict_to_subgroup(group_diagonal(g, 1 * 4 + 0), h),
                    std::invalid_argument);
}

TEST_CASE("semidirect diagonals from component Kronecker factors") {
    // For G x|_phi H, B_(g,h) = (B_g Q_h) (x) B_h with Q_h the permutation
    // matrix of phi_h (Q_h e_c = e_{phi_h(c)}).
    FiniteGroup c3 = make_cyclic(3);
    FiniteGroup c2 = make_cyclic(2);
    std::vector<ElementId> id3{0, 1, 2}, inv3{0, 2, 1};
    std::vector<std::vector<ElementId>> phi{id3, inv3};
    FiniteGroup semi = semidirect_product(c3, c2, phi);

    for (ElementId g = 0; g < 3; ++g)
        for (ElementId h = 0; h < 2; ++h) {
            Eigen::MatrixXd q = Eigen::MatrixXd::Zero(3, 3);
            for (int c = 0; c < 3; ++c) q(phi[h][c], c) = 1.0;
            Eigen::MatrixXd lhs = densify(group_diagonal(semi, g * 2 + h));
            Eigen::MatrixXd rhs =
                kron(densify(group_diagonal(c3, g)) * q, densify(group_diagonal(c2, h)));
            CHECK((lhs - rhs).norm() == 0.0);
        }
}

TEST_CASE("diagonal basis form") {
    std::mt19937_64 rng(53);

    // Group matrix -> constant rows equal to the coefficients.
    FiniteGroup c6 = make_cyclic(6);
    Eigen::VectorXd phi = random_vector(6, rng);
    DiagonalBasisForm f = F_of(densify(gm_from_coeffs(c6, phi)), c6);
    for (int g = 0; g < 6; ++g)
        for (int h = 0; h < 6; ++h) CHECK(f.F(g, h) == phi(g));

    // Identity matrix -> all-ones row at the identity, zeros elsewhere.
    DiagonalBasisForm fi = F_of(Eigen::MatrixXd::Identity(6, 6), c6);
    CHECK(fi.F.row(0) == Eigen::RowVectorXd::Ones(6));
    CHECK(fi.F.bottomRows(5).norm() == 0.0);

    // Exact round trip on dense matrices, including nonabelian groups.
    FiniteGroup s3 = make_symmetric(3);
    for (const FiniteGroup* g : {&c6, &s3}) {
        for (int trial = 0; trial < 10; ++trial) {
            Eigen::MatrixXd m(g->order(), g->order());
            for (int i = 0; i < g->order(); ++i) m.row(i) = random_vector(g->order(), rng);
            CHECK((M_of(F_of(m, *g)) - m).norm() == 0.0);
        }
    }

    // The defining identity M = sum_g diag(F_g) B_g, rebuilt explicitly.
    Eigen::MatrixXd m(6, 6);
    for (int i = 0; i < 6; ++i) m.row(i) = random_vector(6, rng);
    DiagonalBasisForm fs = F_of(m, s3);
    Eigen::MatrixXd rebuilt = Eigen::MatrixXd::Zero(6, 6);
    for (ElementId g = 0; g < 6; ++g)
        rebuilt += Eigen::MatrixXd(fs.F.row(g).asDiagonal()) * densify(group_diagonal(s3, g));
    CHECK((rebuilt - m).norm() == 0.0);
}

TEST_CASE("group matrix membership test") {
    FiniteGroup c8 = make_cyclic(8);
    std::mt19937_64 rng(71);
    Eigen::MatrixXd m = densify(gm_from_coeffs(c8, random_vector(8, rng)));
    auto ok = is_group_matrix(m, c8, 1e-12);
    CHECK(ok.ok);
    CHECK(ok.max_deviation == 0.0);

    Eigen::MatrixXd perturbed = m;
    perturbed(2, 5) += 0.1;
    auto bad = is_group_matrix(perturbed, c8, 1e-12);
    CHECK_FALSE(bad.ok);
    CHECK(bad.max_deviation == doctest::Approx(0.1));

    CHECK(is_group_matrix(perturbed, c8, std::numeric_limits<double>::infinity()).ok);
}

TEST_CASE("group diagonals form a disjoint-support basis") {
    FiniteGroup d4 = make_dihedral(4);
    for (ElementId g1 = 0; g1 < 8; ++g1)
        for (ElementId g2 = g1 + 1; g2 < 8; ++g2) {
            GroupDiagonal a = group_diagonal(d4, g1);
            GroupDiagonal b = group_diagonal(d4, g2);
            for (int h = 0; h < 8; ++h) CHECK(a.col_of_row[h] != b.col_of_row[h]);
        }
}
