#include "gm/checks.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "gm/displacement.hpp"
#include "gm/group_matrix.hpp"
#include "gm/layers.hpp"
#include "gm/nn.hpp"

namespace gm::checks {

namespace {

Eigen::VectorXd gaussian_vector(int n, std::mt19937_64& rng) {
    std::normal_distribution<double> dist;
    Eigen::VectorXd v(n);
    for (int i = 0; i < n; ++i) v(i) = dist(rng);
    return v;
}

Eigen::MatrixXd gaussian_matrix(int n, std::mt19937_64& rng) {
    Eigen::MatrixXd m(n, n);
    for (int i = 0; i < n; ++i) m.row(i) = gaussian_vector(n, rng).transpose();
    return m;
}

// Per-trial seeds derived once, so trial loops can run in any order (or
// in parallel) with identical results.
std::vector<std::uint64_t> trial_seeds(int trials, std::uint64_t seed) {
    std::mt19937_64 rng(seed ^ 0x5eed5eed5eedULL);
    std::vector<std::uint64_t> seeds(trials);
    for (auto& s : seeds) s = rng();
    return seeds;
}

struct TrialOutcome {
    bool failed = false;
    bool skipped = false;
    double worst = 0.0;
    std::vector<Eigen::MatrixXd> inputs;
};

// Runs trials in parallel and merges outcomes deterministically (first
// failing trial index wins).
template <typename Fn>
void run_trials(SuiteResult& result, int trials, std::uint64_t seed, Fn&& trial) {
    std::vector<std::uint64_t> seeds = trial_seeds(trials, seed);
    std::vector<TrialOutcome> outcomes(trials);
#pragma omp parallel for schedule(static)
    for (int t = 0; t < trials; ++t) {
        try {
            outcomes[t] = trial(seeds[t]);
        } catch (const std::exception&) {
            outcomes[t].failed = true;  // a throwing trial is a failing trial
        }
    }
    result.trials += trials;
    for (int t = 0; t < trials; ++t) {
        const TrialOutcome& o = outcomes[t];
        result.worst = std::max(result.worst, o.worst);
        if (o.skipped) ++result.skipped;
        if (o.failed) {
            ++result.failures;
            if (result.failing_trial < 0) {
                result.failing_trial = t;
                result.failing_seed = seeds[t];
                result.counterexample = o.inputs;
            }
        }
    }
    result.pass = result.pass && result.failures == 0;
}

Eigen::MatrixXd kron(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
    Eigen::MatrixXd out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < a.cols(); ++j)
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    return out;
}

}  // namespace

SuiteResult check_prop1(const FiniteGroup& g, const FiniteGroup& h, const FiniteGroup& gh,
                        int trials, std::uint64_t seed) {
    SuiteResult result;
    result.name = "prop1";
    constexpr double kTol = 1e-10;

    run_trials(result, trials, seed, [&](std::uint64_t s) {
        TrialOutcome out;
        std::mt19937_64 rng(s);
        Eigen::MatrixXd m = densify(gm_from_coeffs(g, gaussian_vector(g.order(), rng)));
        Eigen::MatrixXd n = densify(gm_from_coeffs(g, gaussian_vector(g.order(), rng)));
        Eigen::MatrixXd k = densify(gm_from_coeffs(h, gaussian_vector(h.order(), rng)));

        double dev = is_group_matrix(m.transpose(), g, kTol).max_deviation;
        dev = std::max(dev, is_group_matrix(m * n, g, kTol).max_deviation);
        dev = std::max(dev, is_group_matrix(kron(m, k), gh, kTol).max_deviation);

        // Inverse leg on a diagonally dominant draw, so closure is tested
        // without the check drowning in inversion roundoff; the condition
        // guard stays active regardless.
        Eigen::VectorXd phi = gaussian_vector(g.order(), rng);
        phi(g.identity()) += 2.0 * phi.lpNorm<1>() + 1.0;
        Eigen::MatrixXd w = densify(gm_from_coeffs(g, phi));
        double cond = frobenius_condition_estimate(w);
        if (cond > 1e8) {
            out.skipped = true;
        } else {
            dev = std::max(dev, is_group_matrix(w.inverse(), g, kTol).max_deviation);
        }

        out.worst = dev;
        if (dev > kTol) {
            out.failed = true;
            out.inputs = {m, n, k, w};
        }
        return out;
    });
    std::ostringstream detail;
    detail << "max deviation " << result.worst << " (tol 1e-10), " << result.skipped
           << " inverse trials skipped";
    result.detail = detail.str();
    return result;
}

SuiteResult check_prop2(const FiniteGroup& g, const FiniteGroup& h, const FiniteGroup& gh,
                        int trials, std::uint64_t seed) {
    SuiteResult result;
    result.name = "prop2";

    run_trials(result, trials, seed, [&](std::uint64_t s) {
        TrialOutcome out;
        std::mt19937_64 rng(s);
        Eigen::MatrixXd m = gaussian_matrix(g.order(), rng);
        Eigen::MatrixXd n = gaussian_matrix(g.order(), rng);
        Eigen::MatrixXd a = gaussian_matrix(g.order(), rng);
        Eigen::MatrixXd b = gaussian_matrix(h.order(), rng);

        BoundCheck item1 = prop2_transpose(m, g);
        BoundCheck item2 = prop2_product(m, n, g);
        BoundCheck item3 = prop2_kronecker(a, g, b, h, gh);
        out.worst = std::abs(item1.left - item1.right);
        if (!item1.pass || !item2.pass || !item3.pass) {
            out.failed = true;
            out.inputs = {m, n, a, b};
        }
        return out;
    });
    std::ostringstream detail;
    detail << "worst transpose-equality gap " << result.worst;
    result.detail = detail.str();
    return result;
}

SuiteResult check_prop3(const FiniteGroup& g, const FiniteGroup& h, const FiniteGroup& gh) {
    SuiteResult result;
    result.name = "prop3";

    auto gm_basis = [](const FiniteGroup& grp) {
        std::vector<Eigen::MatrixXd> basis;
        for (ElementId e = 0; e < static_cast<ElementId>(grp.order()); ++e)
            basis.push_back(densify(group_diagonal(grp, e)));
        return basis;
    };
    auto row_basis = [&](ElementId row) {
        std::vector<Eigen::MatrixXd> basis = gm_basis(g);
        for (int c = 0; c < g.order(); ++c) {
            Eigen::MatrixXd f = Eigen::MatrixXd::Zero(g.order(), g.order());
            f(row, c) = 1.0;
            basis.push_back(M_of(DiagonalBasisForm{&g, std::move(f)}));
        }
        return basis;
    };

    const ElementId pos1 = static_cast<ElementId>(g.order() / 3);
    const ElementId pos2 = static_cast<ElementId>(2 * g.order() / 3);
    std::vector<std::vector<Eigen::MatrixXd>> classes{
        gm_basis(g),
        ldr_class_basis(g, {pos1}),
        ldr_class_basis(g, {pos1, pos2}),
        row_basis(0),
        row_basis(static_cast<ElementId>(g.order() - 1)),
    };

    int checked = 0, failures = 0;
    // Item 1: transpose preserves the dimension exactly, on every class.
    for (const auto& basis : classes) {
        Prop3Report r = prop3_transpose(g, basis);
        ++checked;
        if (!r.pass) ++failures;
    }
    // Item 2: additive bound for sums, on every class pair.
    for (std::size_t i = 0; i < classes.size(); ++i)
        for (std::size_t j = 0; j < classes.size(); ++j) {
            Prop3Report r = prop3_sum(g, classes[i], classes[j]);
            ++checked;
            if (!r.pass) ++failures;
        }
    // Item 3: Kronecker against right-factor classes with one free
    // direction per basis-form row (identity span and the H group-matrix
    // singleton), where the additive bound applies.
    std::vector<std::vector<Eigen::MatrixXd>> right{
        {Eigen::MatrixXd::Identity(h.order(), h.order())},
        {densify(group_diagonal(h, static_cast<ElementId>(h.order() - 1)))},
    };
    for (const auto& left : classes)
        for (const auto& rhs : right) {
            Prop3Report r = prop3_kronecker(g, left, h, rhs, gh);
            ++checked;
            if (!r.pass) ++failures;
        }

    result.trials = checked;
    result.failures = failures;
    result.pass = failures == 0;
    std::ostringstream detail;
    detail << checked << " class checks, " << failures << " violations";
    result.detail = detail.str();
    return result;
}

SuiteResult check_lemma1(const FiniteGroup& g, int trials, std::uint64_t seed) {
    SuiteResult result;
    result.name = "lemma1";

    // Deterministic battery of generated subgroups.
    std::vector<Subgroup> subs;
    subs.push_back(Subgroup::from_generators(g, {}));
    for (ElementId e = 0; e < static_cast<ElementId>(g.order()); ++e) {
        Subgroup s = Subgroup::from_generators(g, {e});
        if (s.order() < g.order()) subs.push_back(std::move(s));
    }

    run_trials(result, trials, seed, [&](std::uint64_t s) {
        TrialOutcome out;
        std::mt19937_64 rng(s);
        const Subgroup& sub = subs[rng() % subs.size()];
        ElementId member = sub.member_ids()[rng() % sub.member_ids().size()];
        GroupDiagonal diag = group_diagonal(g, member);
        // Rows labeled by H have their single 1 inside H-labeled columns.
        for (ElementId row : sub.member_ids())
            if (!sub.contains(diag.col_of_row[row])) out.failed = true;
        GroupDiagonal restricted = restrict_to_subgroup(diag, sub);
        GroupDiagonal native = group_diagonal(sub.as_group(), sub.local_id(member));
        if (restricted.col_of_row != native.col_of_row) out.failed = true;
        if (out.failed) out.inputs = {densify(diag)};
        return out;
    });
    result.detail = std::to_string(subs.size()) + " subgroups in the battery";
    return result;
}

SuiteResult check_ddim(const PaddedWindow& window) {
    SuiteResult result;
    result.name = "ddim";
    PaddingBoundReport report = padded_conv_displacement_bound(window);
    result.trials = 1;
    result.pass = report.pass;
    result.failures = report.pass ? 0 : 1;
    result.worst = report.measured_dim;
    std::ostringstream detail;
    detail << "dim " << report.measured_dim << " <= " << report.dim_bound << ", rank "
           << report.measured_rank << " <= " << report.rank_bound;
    result.detail = detail.str();
    return result;
}

SuiteResult check_gradcheck(const FiniteGroup& g, int trials, std::uint64_t seed) {
    SuiteResult result;
    result.name = "gradcheck";
    constexpr double kTol = 1e-5;

    run_trials(result, trials, seed, [&](std::uint64_t s) {
        TrialOutcome out;
        std::mt19937_64 rng(s);
        std::normal_distribution<double> dist(0.0, 0.5);

        // A fresh small network touching every layer type, with all
        // parameters perturbed off their init values.
        nn::Network net(g, 1);
        net.add_conv(make_conv_layer(g, 1, 1, 2, ErrorKind::FullF, 0, &rng));
        net.add_prelu();
        net.add_conv(make_conv_layer(g, 1, 2, 2, ErrorKind::Ldr, 1, &rng), true);
        ElementId gen = g.generators().empty() ? g.identity() : g.generators().front();
        Subgroup sub = Subgroup::from_generators(g, {g.mul(gen, gen)});
        int mode = static_cast<int>(rng() % 2);
        net.add_pool(make_pool_layer(g, sub, mode ? PoolMode::Max : PoolMode::Mean, 2));
        net.add_dense(2, &rng);
        for (auto* block : net.param_blocks())
            for (double& v : *block)
                if (v == 0.0) v = dist(rng);

        Channels x{gaussian_vector(g.order(), rng)};
        const int label = static_cast<int>(rng() % 2);
        auto loss_value = [&]() {
            Channels o = net.forward(x);
            return nn::cross_entropy_loss(o[0], label);
        };

        std::vector<Channels> caches;
        Channels o = net.forward(x, &caches);
        Eigen::VectorXd dlogits;
        nn::cross_entropy_loss(o[0], label, &dlogits);
        auto grads = net.zero_grads();
        net.backward(caches, Channels{dlogits}, grads);

        auto params = net.param_blocks();
        for (std::size_t b = 0; b < params.size(); ++b) {
            if (params[b]->empty()) continue;
            std::vector<double>& block = *params[b];
            double num = 0.0, den = 0.0;
            for (std::size_t i = 0; i < block.size(); ++i) {
                double saved = block[i];
                block[i] = saved + 1e-5;
                double up = loss_value();
                block[i] = saved - 1e-5;
                double down = loss_value();
                block[i] = saved;
                double fd = (up - down) / 2e-5;
                num += (grads[b][i] - fd) * (grads[b][i] - fd);
                den += fd * fd;
            }
            double rel = std::sqrt(num) / std::max(std::sqrt(den), 1e-12);
            out.worst = std::max(out.worst, rel);
        }

        // Separate strided layer (outside the network container).
        StrideLayer stride = make_stride_layer(sub, make_conv_layer(g, 1, 1, 1, ErrorKind::None,
                                                                    0, &rng));
        Channels sx{gaussian_vector(g.order(), rng)};
        Channels sdy{gaussian_vector(sub.order(), rng)};
        StrideGrads sg = stride_backward(stride, sx, sdy);
        double num = 0.0, den = 0.0;
        for (std::size_t i = 0; i < stride.conv.weights.size(); ++i) {
            double saved = stride.conv.weights[i];
            stride.conv.weights[i] = saved + 1e-5;
            double up = sdy[0].dot(stride_forward(stride, sx)[0]);
            stride.conv.weights[i] = saved - 1e-5;
            double down = sdy[0].dot(stride_forward(stride, sx)[0]);
            stride.conv.weights[i] = saved;
            double fd = (up - down) / 2e-5;
            num += (sg.dw[i] - fd) * (sg.dw[i] - fd);
            den += fd * fd;
        }
        out.worst = std::max(out.worst, std::sqrt(num) / std::max(std::sqrt(den), 1e-12));

        if (out.worst > kTol) out.failed = true;
        return out;
    });
    std::ostringstream detail;
    detail << "worst relative gradient error " << result.worst << " (tol 1e-5)";
    result.detail = detail.str();
    return result;
}

SuiteResult check_equivariance(const FiniteGroup& g, int trials, std::uint64_t seed) {
    SuiteResult result;
    result.name = "equiv";
    constexpr double kEquivTol = 1e-10;
    constexpr double kOracleTol = 1e-12;

    run_trials(result, trials, seed, [&](std::uint64_t s) {
        TrialOutcome out;
        std::mt19937_64 rng(s);
        int radius = static_cast<int>(rng() % static_cast<std::uint64_t>(g.diameter() + 1));
        int in = 1 + static_cast<int>(rng() % 2);
        int outc = 1 + static_cast<int>(rng() % 2);
        GmConvLayer layer = make_conv_layer(g, radius, in, outc, ErrorKind::None, 0, &rng);

        Channels x;
        for (int c = 0; c < in; ++c) x.push_back(gaussian_vector(g.order(), rng));
        Channels fx = conv_forward(layer, x);

        double dev = 0.0;
        for (ElementId e = 0; e < static_cast<ElementId>(g.order()); ++e) {
            Channels lhs = conv_forward(layer, translate(g, e, x));
            Channels rhs = translate(g, e, fx);
            for (int c = 0; c < outc; ++c)
                dev = std::max(dev, (lhs[c] - rhs[c]).cwiseAbs().maxCoeff());
        }

        // Brute-force convolution oracle.
        double rel = 0.0;
        for (int o = 0; o < outc; ++o) {
            Eigen::VectorXd oracle = Eigen::VectorXd::Zero(g.order());
            for (int i = 0; i < in; ++i) {
                Eigen::VectorXd phi = Eigen::VectorXd::Zero(g.order());
                for (int sidx = 0; sidx < layer.support_size(); ++sidx)
                    phi(layer.support[sidx]) = layer.w(o, i, sidx);
                for (ElementId a = 0; a < static_cast<ElementId>(g.order()); ++a)
                    for (ElementId b = 0; b < static_cast<ElementId>(g.order()); ++b)
                        oracle(g.mul(a, b)) += phi(a) * x[i](b);
            }
            rel = std::max(rel, (fx[o] - oracle).norm() / std::max(oracle.norm(), 1e-300));
        }

        out.worst = std::max(dev, rel);
        if (dev > kEquivTol || rel > kOracleTol) {
            out.failed = true;
            for (const auto& c : x) out.inputs.push_back(c);
        }
        return out;
    });
    std::ostringstream detail;
    detail << "worst deviation " << result.worst;
    result.detail = detail.str();
    return result;
}

SuiteResult check_displacement(const FiniteGroup& g, int trials, std::uint64_t seed) {
    SuiteResult result;
    result.name = "displacement";

    run_trials(result, trials, seed, [&](std::uint64_t s) {
        TrialOutcome out;
        std::mt19937_64 rng(s);
        const int n = g.order();

        // Group matrix -> zero displacement.
        Eigen::MatrixXd gmat = densify(gm_from_coeffs(g, gaussian_vector(n, rng)));
        DisplacementResult dz = displacement_D(F_of(gmat, g));
        if (dz.rank != 0 || dz.residual.norm() != 0.0) out.failed = true;

        // Perturbed matrix -> nonzero displacement iff not a group matrix.
        Eigen::MatrixXd noisy = gmat;
        noisy(static_cast<int>(rng() % n), static_cast<int>(rng() % n)) +=
            0.1 + std::abs(gaussian_vector(1, rng)(0));
        DisplacementResult dn = displacement_D(F_of(noisy, g));
        bool gm = is_group_matrix(noisy, g, 1e-10).ok;
        if ((dn.rank == 0) != gm) out.failed = true;

        // LDR rank identity with random a-vectors.
        int r = 1 + static_cast<int>(rng() % 3);
        std::vector<ElementId> ids(n);
        for (int i = 0; i < n; ++i) ids[i] = static_cast<ElementId>(i);
        std::shuffle(ids.begin(), ids.end(), rng);
        LdrKernel kernel{&g, gaussian_vector(n, rng),
                         std::vector<ElementId>(ids.begin(), ids.begin() + r), {}};
        for (int j = 0; j < r; ++j) kernel.a_vectors.push_back(gaussian_vector(n, rng));
        Eigen::MatrixXd built = ldr_build(kernel);  // asserts rank(D) == dim span{a}
        int drank = displacement_D(F_of(built, g)).rank;
        if (drank != r) out.failed = true;
        out.worst = drank;
        if (out.failed) out.inputs = {gmat, noisy, built};
        return out;
    });
    result.detail = "zero-displacement characterization and LDR rank identity";
    return result;
}

}  // namespace gm::checks
