#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

namespace gm {

using ElementId = std::uint32_t;

/// Hard cap on group order so dense id-indexed tables stay addressable.
inline constexpr std::uint64_t kMaxGroupOrder = 1u << 20;

/// A finite group given by its Cayley table over dense element ids
/// 0..order-1, together with a symmetric generating set and the word
/// metric it induces on the Cayley graph.
///
/// Construction validates the group axioms (exhaustively up to order 64,
/// by sampling above), closes the generating set under inverses and
/// computes word distances by BFS from the identity. Instances are
/// immutable afterwards and safe to share across threads.
class FiniteGroup {
public:
    /// mul_table is row-major order*order with entry [g*order + h] = g*h.
    FiniteGroup(std::vector<ElementId> mul_table,
                std::vector<ElementId> generators,
                std::vector<std::string> element_labels = {});

    int order() const { return order_; }
    ElementId identity() const { return identity_; }

    ElementId mul(ElementId a, ElementId b) const {
        return mul_[static_cast<std::size_t>(a) * order_ + b];
    }
    ElementId inv(ElementId a) const { return inv_[a]; }

    const std::vector<ElementId>& generators() const { return generators_; }
    int word_dist(ElementId g) const { return word_dist_[g]; }
    const std::vector<int>& word_dists() const { return word_dist_; }
    int diameter() const { return diameter_; }

    bool has_labels() const { return !labels_.empty(); }
    std::string label(ElementId g) const;

private:
    int order_ = 0;
    ElementId identity_ = 0;
    std::vector<ElementId> mul_;
    std::vector<ElementId> inv_;
    std::vector<ElementId> generators_;
    std::vector<int> word_dist_;
    int diameter_ = 0;
    std::vector<std::string> labels_;
};

/// Cyclic group C_n with mul = addition mod n and generators {1, n-1}.
FiniteGroup make_cyclic(int n);
FiniteGroup make_cyclic(int n, std::vector<ElementId> generators);

/// Dihedral group D_n of order 2n. Element i + n*j encodes r^i s^j;
/// generators are {r, r^-1, s} (just {s} for n = 1).
FiniteGroup make_dihedral(int n);

/// Symmetric group S_n, n <= 7. Element ids are lexicographic ranks of
/// the permutations (identity = 0); generators are the adjacent
/// transpositions.
FiniteGroup make_symmetric(int n);

/// Direct product G x H with element id (g,h) = g*|H| + h.
///
/// The default generating set is the product of the component radius-1
/// balls minus the identity, so that word balls satisfy
/// N_k(G x H) = N_k(G) * N_k(H); for a product of two cyclic groups the
/// radius-k ball then has (2k+1)^2 elements, matching the square-kernel
/// convention of classical CNNs. Pass explicit generators to override
/// (e.g. the union of embedded component generators).
FiniteGroup direct_product(const FiniteGroup& g, const FiniteGroup& h);
FiniteGroup direct_product(const FiniteGroup& g, const FiniteGroup& h,
                           std::vector<ElementId> generators);

/// Semidirect product G x|_phi H with operation
/// (g,h)(g',h') = (g * phi_h(g'), h h').
/// `action[h]` is the permutation phi_h of G's elements. Every phi_h must
/// be an automorphism of G and h -> phi_h a homomorphism; both are
/// verified exhaustively and violations raise std::invalid_argument.
FiniteGroup semidirect_product(const FiniteGroup& g, const FiniteGroup& h,
                               const std::vector<std::vector<ElementId>>& action);

/// All elements at word distance <= radius, sorted by (distance, id).
std::vector<ElementId> word_ball(const FiniteGroup& g, int radius);

/// A verified subgroup: contains the identity, closed under mul/inv.
/// The |H|-element group over local ids 0..|H|-1 is materialized at
/// construction and shared between copies.
class Subgroup {
public:
    /// Verifies closure of an explicit member set.
    Subgroup(const FiniteGroup& parent, std::vector<ElementId> members);

    /// Closure of `gens` (and the identity) under multiplication.
    static Subgroup from_generators(const FiniteGroup& parent,
                                    const std::vector<ElementId>& gens);

    const FiniteGroup& parent() const { return *parent_; }
    const std::vector<ElementId>& member_ids() const { return members_; }
    int order() const { return static_cast<int>(members_.size()); }

    bool contains(ElementId parent_id) const {
        return local_of_parent_[parent_id] >= 0;
    }
    ElementId local_id(ElementId parent_id) const;
    ElementId parent_id(ElementId local) const { return members_[local]; }

    /// The subgroup as a standalone group over local ids.
    const FiniteGroup& as_group() const { return *group_; }

private:
    Subgroup() = default;
    void materialize(std::vector<ElementId> local_generators);

    const FiniteGroup* parent_ = nullptr;
    std::vector<ElementId> members_;           // sorted parent ids
    std::vector<std::int64_t> local_of_parent_; // -1 when absent
    std::shared_ptr<const FiniteGroup> group_;
};

/// Right cosets Hg_1,...,Hg_n of a subgroup, with each representative
/// chosen at minimal word distance from the identity (ties broken by
/// smallest element id), and the pooling blocks P_h = {h * rep_i}.
struct CosetPartition {
    Subgroup subgroup;
    std::vector<std::vector<ElementId>> cosets;     // sorted parent ids
    std::vector<ElementId> representatives;          // one per coset
    std::vector<std::vector<ElementId>> partitions;  // [local h] -> block P_h
};

CosetPartition right_cosets(const FiniteGroup& g, const Subgroup& h);

/// Homogeneous space X = G/H (cosets gH) with a fixed choice of
/// representatives, one per coset.
class HomogeneousSpace {
public:
    enum class RepPolicy {
        ClosestToIdentity,  // min word distance, ties -> smallest id
        LargestId           // alternate choice, used to test representative independence
    };

    HomogeneousSpace(const FiniteGroup& group, Subgroup stabilizer,
                     RepPolicy policy = RepPolicy::ClosestToIdentity);

    const FiniteGroup& group() const { return *group_; }
    const Subgroup& stabilizer() const { return stabilizer_; }
    const std::vector<ElementId>& representatives() const { return reps_; }
    int size() const { return static_cast<int>(reps_.size()); }

    /// Index into representatives() of the coset gH.
    int coset_index(ElementId g) const { return coset_index_[g]; }

private:
    const FiniteGroup* group_;
    Subgroup stabilizer_;
    std::vector<ElementId> reps_;
    std::vector<int> coset_index_;
};

}  // namespace gm
