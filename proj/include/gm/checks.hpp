#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "gm/group.hpp"
#include "gm/window.hpp"

#include <Eigen/Dense>

namespace gm::checks {

/// Outcome of one randomized/deterministic property suite. On failure the
/// first counterexample's inputs and per-trial seed are retained so the
/// run can be replayed.
struct SuiteResult {
    std::string name;
    bool pass = true;
    int trials = 0;
    int failures = 0;
    int skipped = 0;
    double worst = 0.0;  // suite-specific worst deviation / measured value
    std::string detail;
    int failing_trial = -1;
    std::uint64_t failing_seed = 0;
    std::vector<Eigen::MatrixXd> counterexample;
};

/// Closure of group matrices under transpose, dense inverse, product, and
/// Kronecker (into the supplied product group): dense results must pass
/// the group-matrix test within 1e-10. Inverse trials draw diagonally
/// dominant coefficients and additionally skip condition numbers above
/// 1e8.
SuiteResult check_prop1(const FiniteGroup& g, const FiniteGroup& h, const FiniteGroup& gh,
                        int trials, std::uint64_t seed);

/// Distance-to-group-matrix bounds: transpose equality within 1e-10,
/// product and Kronecker inequalities with zero violations.
SuiteResult check_prop2(const FiniteGroup& g, const FiniteGroup& h, const FiniteGroup& gh,
                        int trials, std::uint64_t seed);

/// Displacement-dimension behavior on a fixed class battery: transpose
/// preserves the dimension exactly; sum and Kronecker satisfy the
/// additive upper bounds.
SuiteResult check_prop3(const FiniteGroup& g, const FiniteGroup& h, const FiniteGroup& gh);

/// Subgroup restriction of group diagonals: entries of B_h on H-labeled
/// rows stay in H-labeled columns, and the restricted diagonal equals the
/// natively built one, over generated subgroups of g.
SuiteResult check_lemma1(const FiniteGroup& g, int trials, std::uint64_t seed);

/// Padding bounds: measured displacement dimension and rank of the padded
/// conv class against |boundary|*|N| and |boundary|.
SuiteResult check_ddim(const PaddedWindow& window);

/// Backward-pass finite-difference checks over every layer type
/// (conv none/full/ldr, pool mean/max, stride, prelu, dense) at 1e-5
/// relative tolerance.
SuiteResult check_gradcheck(const FiniteGroup& g, int trials, std::uint64_t seed);

/// Exact equivariance of error-free conv layers under translation, plus
/// agreement with the brute-force convolution double sum at 1e-12
/// relative.
SuiteResult check_equivariance(const FiniteGroup& g, int trials, std::uint64_t seed);

/// D(M) = 0 exactly characterizes group matrices, both directions, plus
/// LDR rank identities rank(D) = dim span{a_i} and dim_D = |G| r.
SuiteResult check_displacement(const FiniteGroup& g, int trials, std::uint64_t seed);

}  // namespace gm::checks
