#include <random>

#include "doctest.h"
#include "gm/displacement.hpp"
#include "gm/group.hpp"
#include "gm/layers.hpp"
#include "gm/window.hpp"
#include "oracles.hpp"

using namespace gm;

TEST_CASE("window construction") {
    PaddedWindow line = PaddedWindow::line(8, 1);
    CHECK(line.x_in().size() == 8);
    CHECK(line.support().size() == 3);
    CHECK(line.x_padded().size() == 10);
    CHECK(line.boundary().size() == 2);
    CHECK(line.index_in({0, 0}) == 0);      // x_in holds {0..7}
    CHECK(line.index_padded({0, 0}) == 1);  // x_padded holds {-1..8}
    CHECK(line.index_in({-1, 0}) == -1);
    CHECK(line.index_padded({-1, 0}) == 0);

    PaddedWindow box = PaddedWindow::box(8, 8, 1);
    CHECK(box.x_in().size() == 64);
    CHECK(box.support().size() == 9);
    CHECK(box.x_padded().size() == 100);
    CHECK(box.boundary().size() == 36);

    // Support must be symmetric.
    CHECK_THROWS_AS(PaddedWindow::from_support(1, {{0, 0}, {1, 0}}, {{0, 0}, {1, 0}}),
                    std::invalid_argument);
}

TEST_CASE("padded convolution") {
    std::mt19937_64 rng(211);
    PaddedWindow line = PaddedWindow::line(8, 1);

    // Delta kernel is the identity on X_in.
    Eigen::VectorXd delta = Eigen::VectorXd::Zero(3);
    delta(line.dims() == 1 ? 1 : 0) = 1.0;  // offset 0 sits mid-support
    Eigen::VectorXd psi = oracles::random_vector(8, rng);
    CHECK((padded_conv_forward(line, delta, psi) - psi).norm() == 0.0);

    // Moving average equals the classical zero-padded 1-D convolution.
    Eigen::VectorXd avg = Eigen::VectorXd::Constant(3, 1.0 / 3.0);
    std::vector<int> offsets{-1, 0, 1};  // support() is sorted
    Eigen::VectorXd expect = oracles::padded_conv_1d(psi, offsets, avg);
    CHECK((padded_conv_forward(line, avg, psi) - expect).norm() <= 1e-14);

    // 2-D window against the zero-padded 3x3 oracle.
    PaddedWindow box = PaddedWindow::box(8, 8, 1);
    Eigen::VectorXd kernel = oracles::random_vector(9, rng);
    Eigen::VectorXd flat = oracles::random_vector(64, rng);
    Eigen::MatrixXd image(8, 8);
    for (std::size_t i = 0; i < box.x_in().size(); ++i)
        image(box.x_in()[i].x, box.x_in()[i].y) = flat(static_cast<Eigen::Index>(i));
    std::vector<std::array<int, 2>> offs;
    for (const Cell& c : box.support()) offs.push_back({c.x, c.y});
    Eigen::MatrixXd expect2 = oracles::padded_conv_2d(image, offs, kernel);
    Eigen::VectorXd got = padded_conv_forward(box, kernel, flat);
    for (std::size_t i = 0; i < box.x_in().size(); ++i)
        CHECK(got(static_cast<Eigen::Index>(i)) ==
              doctest::Approx(expect2(box.x_in()[i].x, box.x_in()[i].y)).epsilon(1e-12));

    CHECK_THROWS_AS(padded_conv_forward(line, kernel, psi), std::invalid_argument);
}

TEST_CASE("padded conv agrees with exact group conv away from the boundary") {
    // Inputs supported at distance > k from the window edge cannot see the
    // zero padding, so the padded conv equals the circular one on C_8.
    std::mt19937_64 rng(223);
    PaddedWindow line = PaddedWindow::line(8, 1);
    FiniteGroup c8 = make_cyclic(8);

    Eigen::VectorXd kernel = oracles::random_vector(3, rng);
    Eigen::VectorXd psi = Eigen::VectorXd::Zero(8);
    for (int i = 2; i <= 5; ++i) psi(i) = oracles::random_vector(1, rng)(0);

    Eigen::VectorXd phi = Eigen::VectorXd::Zero(8);
    phi(7) = kernel(0);  // offset -1
    phi(0) = kernel(1);
    phi(1) = kernel(2);
    Eigen::VectorXd circular = oracles::group_convolution(c8, phi, psi);
    Eigen::VectorXd padded = padded_conv_forward(line, kernel, psi);
    CHECK((padded - circular).norm() <= 1e-13);
}

TEST_CASE("padding bounds the displacement dimension and rank") {
    PaddedWindow line = PaddedWindow::line(8, 1);
    PaddingBoundReport r1 = padded_conv_displacement_bound(line);
    CHECK(r1.boundary_size == 2);
    CHECK(r1.support_size == 3);
    CHECK(r1.dim_bound == 6);
    CHECK(r1.rank_bound == 2);
    CHECK(r1.measured_dim <= 6);
    CHECK(r1.measured_rank <= 2);
    CHECK(r1.pass);

    PaddedWindow box = PaddedWindow::box(8, 8, 1);
    PaddingBoundReport r2 = padded_conv_displacement_bound(box);
    CHECK(r2.dim_bound == 324);
    CHECK(r2.rank_bound == 36);
    CHECK(r2.measured_dim <= 324);
    CHECK(r2.measured_rank <= 36);
    CHECK(r2.pass);

    // A window covering a full period of nothing... no boundary means no
    // displacement freedom: radius 0 keeps X_padded = X_in.
    PaddedWindow closed = PaddedWindow::line(5, 0);
    PaddingBoundReport r3 = padded_conv_displacement_bound(closed);
    CHECK(r3.boundary_size == 0);
    CHECK(r3.dim_bound == 0);
    CHECK(r3.measured_dim == 0);
    CHECK(r3.measured_rank == 0);
    CHECK(r3.pass);
}

TEST_CASE("padded conv equivariance error concentrates at the boundary") {
    std::mt19937_64 rng(227);
    PaddedWindow line = PaddedWindow::line(8, 1);
    Eigen::VectorXd kernel = oracles::random_vector(3, rng);

    // Shifting by one inside the window: compare conv(shift(x)) with
    // shift(conv(x)) on the overlap.
    auto shift = [](const Eigen::VectorXd& v) {
        Eigen::VectorXd out = Eigen::VectorXd::Zero(v.size());
        for (int i = 1; i < v.size(); ++i) out(i) = v(i - 1);
        return out;
    };

    // Interior-supported input: the shifted output equals the output of
    // the shifted input everywhere.
    Eigen::VectorXd interior = Eigen::VectorXd::Zero(8);
    for (int i = 2; i <= 4; ++i) interior(i) = oracles::random_vector(1, rng)(0);
    Eigen::VectorXd a = padded_conv_forward(line, kernel, shift(interior));
    Eigen::VectorXd b = shift(padded_conv_forward(line, kernel, interior));
    CHECK((a - b).norm() <= 1e-13);

    // Boundary-touching input picks up a positive error.
    Eigen::VectorXd edge = Eigen::VectorXd::Zero(8);
    edge(0) = 1.0;
    edge(7) = -2.0;
    Eigen::VectorXd ae = padded_conv_forward(line, kernel, shift(edge));
    Eigen::VectorXd be = shift(padded_conv_forward(line, kernel, edge));
    CHECK((ae - be).norm() > 1e-6);
}

TEST_CASE("homogeneous-space convolution") {
    std::mt19937_64 rng(229);

    // Trivial stabilizer reduces to the plain group convolution.
    FiniteGroup c6 = make_cyclic(6);
    Subgroup trivial = Subgroup::from_generators(c6, {});
    HomogeneousSpace xfull(c6, trivial);
    CHECK(xfull.size() == 6);
    Eigen::VectorXd phi = oracles::random_vector(6, rng);
    Eigen::VectorXd f = oracles::random_vector(6, rng);
    HomSpaceConvLayer layer = make_homspace_conv(xfull, c6.diameter(), phi);
    // Representatives of singleton cosets are the elements themselves, so
    // indices align with group ids.
    Eigen::VectorXd expect = oracles::group_convolution(
        c6, [&] {
            Eigen::VectorXd full = Eigen::VectorXd::Zero(6);
            for (std::size_t s = 0; s < layer.support.size(); ++s)
                full(layer.support[s]) = phi(static_cast<Eigen::Index>(s));
            return full;
        }(),
        f);
    CHECK((homspace_conv_forward(layer, f) - expect).norm() <= 1e-13);

    // Delta kernel at the identity acts as the identity map.
    FiniteGroup d4 = make_dihedral(4);
    Subgroup refl = Subgroup::from_generators(d4, {4});
    HomogeneousSpace x(d4, refl);
    Eigen::VectorXd fd = oracles::random_vector(4, rng);
    Eigen::VectorXd delta = Eigen::VectorXd::Zero(word_ball(d4, 0).size());
    delta(0) = 1.0;
    HomSpaceConvLayer id_layer = make_homspace_conv(x, 0, delta);
    CHECK((homspace_conv_forward(id_layer, fd) - fd).norm() == 0.0);

    // Random kernel against the brute-force double sum.
    for (int radius : {1, 2, 3}) {
        auto support = word_ball(d4, radius);
        Eigen::VectorXd coeffs = oracles::random_vector(static_cast<int>(support.size()), rng);
        HomSpaceConvLayer conv = make_homspace_conv(x, radius, coeffs);
        Eigen::VectorXd got = homspace_conv_forward(conv, fd);
        Eigen::VectorXd oracle = oracles::homspace_conv_oracle(x, support, coeffs, fd);
        CHECK((got - oracle).norm() <= 1e-13);
    }

    // The output does not depend on the representative choice.
    HomogeneousSpace alt(d4, refl, HomogeneousSpace::RepPolicy::LargestId);
    auto support = word_ball(d4, 1);
    Eigen::VectorXd coeffs = oracles::random_vector(static_cast<int>(support.size()), rng);
    HomSpaceConvLayer conv_a = make_homspace_conv(x, 1, coeffs);
    HomSpaceConvLayer conv_b = make_homspace_conv(alt, 1, coeffs);
    // Signals correspond through coset membership.
    Eigen::VectorXd fb(4);
    for (int i = 0; i < 4; ++i) fb(i) = fd(x.coset_index(alt.representatives()[i]));
    Eigen::VectorXd ya = homspace_conv_forward(conv_a, fd);
    Eigen::VectorXd yb = homspace_conv_forward(conv_b, fb);
    for (int i = 0; i < 4; ++i)
        CHECK(yb(i) == doctest::Approx(ya(x.coset_index(alt.representatives()[i]))));
}
