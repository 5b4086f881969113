#include "gm/group.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <map>
#include <random>
#include <stdexcept>

namespace gm {

namespace {

std::size_t isqrt(std::size_t n) {
    std::size_t r = static_cast<std::size_t>(std::sqrt(static_cast<double>(n)));
    while (r * r > n) --r;
    while ((r + 1) * (r + 1) <= n) ++r;
    return r;
}

}  // namespace

FiniteGroup::FiniteGroup(std::vector<ElementId> mul_table,
                         std::vector<ElementId> generators,
                         std::vector<std::string> element_labels)
    : mul_(std::move(mul_table)),
      generators_(std::move(generators)),
      labels_(std::move(element_labels)) {
    const std::size_t n = isqrt(mul_.size());
    if (n == 0 || n * n != mul_.size())
        throw std::invalid_argument("invalid group order: mul table is not square");
    if (n > kMaxGroupOrder)
        throw std::invalid_argument("group capacity exceeded: order > 2^20");
    order_ = static_cast<int>(n);
    if (!labels_.empty() && labels_.size() != n)
        throw std::invalid_argument("element label count does not match group order");

    for (ElementId v : mul_)
        if (v >= n) throw std::invalid_argument("mul table entry out of range");

    // Identity: the unique e with e*a = a*e = a for all a.
    bool found = false;
    for (ElementId e = 0; e < n && !found; ++e) {
        bool ok = true;
        for (ElementId a = 0; a < n && ok; ++a)
            ok = mul(e, a) == a && mul(a, e) == a;
        if (ok) {
            identity_ = e;
            found = true;
        }
    }
    if (!found) throw std::invalid_argument("mul table has no identity element");

    // Associativity: exhaustive for small orders, sampled above.
    if (n <= 64) {
        for (ElementId a = 0; a < n; ++a)
            for (ElementId b = 0; b < n; ++b)
                for (ElementId c = 0; c < n; ++c)
                    if (mul(mul(a, b), c) != mul(a, mul(b, c)))
                        throw std::invalid_argument("mul table is not associative");
    } else {
        std::mt19937_64 rng(0x9e3779b97f4a7c15ULL);
        std::uniform_int_distribution<ElementId> pick(0, static_cast<ElementId>(n - 1));
        for (std::size_t t = 0; t < 10 * n; ++t) {
            ElementId a = pick(rng), b = pick(rng), c = pick(rng);
            if (mul(mul(a, b), c) != mul(a, mul(b, c)))
                throw std::invalid_argument("mul table is not associative");
        }
    }

    // Two-sided inverses.
    inv_.assign(n, 0);
    for (ElementId a = 0; a < n; ++a) {
        bool ok = false;
        for (ElementId b = 0; b < n; ++b) {
            if (mul(a, b) == identity_ && mul(b, a) == identity_) {
                inv_[a] = b;
                ok = true;
                break;
            }
        }
        if (!ok) throw std::invalid_argument("mul table element has no inverse");
    }

    // Close the generating set under inverses and dedupe.
    for (ElementId g : generators_)
        if (g >= n) throw std::invalid_argument("generator id out of range");
    std::vector<ElementId> gens = generators_;
    for (ElementId g : generators_) gens.push_back(inv_[g]);
    std::sort(gens.begin(), gens.end());
    gens.erase(std::unique(gens.begin(), gens.end()), gens.end());
    generators_ = std::move(gens);

    // Word distances: BFS over the right Cayley graph g -> g*s.
    word_dist_.assign(n, -1);
    word_dist_[identity_] = 0;
    std::deque<ElementId> queue{identity_};
    while (!queue.empty()) {
        ElementId g = queue.front();
        queue.pop_front();
        for (ElementId s : generators_) {
            ElementId next = mul(g, s);
            if (word_dist_[next] < 0) {
                word_dist_[next] = word_dist_[g] + 1;
                queue.push_back(next);
            }
        }
    }
    diameter_ = 0;
    for (std::size_t g = 0; g < n; ++g) {
        if (word_dist_[g] < 0)
            throw std::invalid_argument("generators do not generate the group");
        diameter_ = std::max(diameter_, word_dist_[g]);
    }
}

std::string FiniteGroup::label(ElementId g) const {
    if (g < labels_.size()) return labels_[g];
    return std::to_string(g);
}

FiniteGroup make_cyclic(int n) {
    std::vector<ElementId> gens;
    if (n > 1) {
        gens.push_back(1);
        gens.push_back(static_cast<ElementId>(n - 1));
    }
    return make_cyclic(n, std::move(gens));
}

FiniteGroup make_cyclic(int n, std::vector<ElementId> generators) {
    if (n <= 0) throw std::invalid_argument("invalid group order: n must be >= 1");
    std::vector<ElementId> mul(static_cast<std::size_t>(n) * n);
    std::vector<std::string> labels(n);
    for (int a = 0; a < n; ++a) {
        labels[a] = std::to_string(a);
        for (int b = 0; b < n; ++b)
            mul[static_cast<std::size_t>(a) * n + b] = static_cast<ElementId>((a + b) % n);
    }
    return FiniteGroup(std::move(mul), std::move(generators), std::move(labels));
}

FiniteGroup make_dihedral(int n) {
    if (n <= 0) throw std::invalid_argument("invalid group order: n must be >= 1");
    const int order = 2 * n;
    std::vector<ElementId> mul(static_cast<std::size_t>(order) * order);
    std::vector<std::string> labels(order);
    auto id_of = [n](int i, int j) { return static_cast<ElementId>(j * n + i); };
    for (int j1 = 0; j1 < 2; ++j1)
        for (int i1 = 0; i1 < n; ++i1) {
            labels[id_of(i1, j1)] =
                (j1 == 0 ? "r^" + std::to_string(i1) : "r^" + std::to_string(i1) + " s");
            for (int j2 = 0; j2 < 2; ++j2)
                for (int i2 = 0; i2 < n; ++i2) {
                    // (r^i1 s^j1)(r^i2 s^j2) = r^(i1 + (-1)^j1 i2) s^(j1 xor j2)
                    int i = j1 == 0 ? (i1 + i2) % n : ((i1 - i2) % n + n) % n;
                    int j = j1 ^ j2;
                    mul[static_cast<std::size_t>(id_of(i1, j1)) * order + id_of(i2, j2)] =
                        id_of(i, j);
                }
        }
    std::vector<ElementId> gens;
    if (n > 1) {
        gens.push_back(id_of(1, 0));
        gens.push_back(id_of(n - 1, 0));
    }
    gens.push_back(id_of(0, 1));
    return FiniteGroup(std::move(mul), std::move(gens), std::move(labels));
}

FiniteGroup make_symmetric(int n) {
    if (n <= 0) throw std::invalid_argument("invalid group order: n must be >= 1");
    if (n > 7) throw std::invalid_argument("group capacity exceeded: S_n supported up to n = 7");
    std::vector<std::vector<int>> perms;
    std::vector<int> p(n);
    for (int i = 0; i < n; ++i) p[i] = i;
    do {
        perms.push_back(p);
    } while (std::next_permutation(p.begin(), p.end()));
    const int order = static_cast<int>(perms.size());

    std::map<std::vector<int>, ElementId> rank;
    for (int i = 0; i < order; ++i) rank[perms[i]] = static_cast<ElementId>(i);

    std::vector<ElementId> mul(static_cast<std::size_t>(order) * order);
    std::vector<std::string> labels(order);
    std::vector<int> comp(n);
    for (int a = 0; a < order; ++a) {
        std::string lbl;
        for (int i = 0; i < n; ++i) lbl += std::to_string(perms[a][i]);
        labels[a] = lbl;
        for (int b = 0; b < order; ++b) {
            for (int i = 0; i < n; ++i) comp[i] = perms[a][perms[b][i]];
            mul[static_cast<std::size_t>(a) * order + b] = rank.at(comp);
        }
    }

    std::vector<ElementId> gens;
    for (int i = 0; i + 1 < n; ++i) {
        std::vector<int> t(n);
        for (int j = 0; j < n; ++j) t[j] = j;
        std::swap(t[i], t[i + 1]);
        gens.push_back(rank.at(t));
    }
    return FiniteGroup(std::move(mul), std::move(gens), std::move(labels));
}

namespace {

std::vector<ElementId> product_generators(const FiniteGroup& g, const FiniteGroup& h) {
    // Product of the component radius-1 balls, minus the identity. This
    // makes the product word metric the max of the component metrics, so
    // N_k(G x H) = N_k(G) * N_k(H).
    auto ball_g = word_ball(g, 1);
    auto ball_h = word_ball(h, 1);
    std::vector<ElementId> gens;
    for (ElementId a : ball_g)
        for (ElementId b : ball_h) {
            if (a == g.identity() && b == h.identity()) continue;
            gens.push_back(a * static_cast<ElementId>(h.order()) + b);
        }
    return gens;
}

std::vector<std::string> product_labels(const FiniteGroup& g, const FiniteGroup& h) {
    std::vector<std::string> labels;
    labels.reserve(static_cast<std::size_t>(g.order()) * h.order());
    for (int a = 0; a < g.order(); ++a)
        for (int b = 0; b < h.order(); ++b)
            labels.push_back("(" + g.label(static_cast<ElementId>(a)) + "," +
                             h.label(static_cast<ElementId>(b)) + ")");
    return labels;
}

}  // namespace

FiniteGroup direct_product(const FiniteGroup& g, const FiniteGroup& h) {
    return direct_product(g, h, product_generators(g, h));
}

FiniteGroup direct_product(const FiniteGroup& g, const FiniteGroup& h,
                           std::vector<ElementId> generators) {
    const std::uint64_t order =
        static_cast<std::uint64_t>(g.order()) * static_cast<std::uint64_t>(h.order());
    if (order > kMaxGroupOrder)
        throw std::invalid_argument("group capacity exceeded: product order > 2^20");
    const int ng = g.order(), nh = h.order(), n = static_cast<int>(order);
    std::vector<ElementId> mul(static_cast<std::size_t>(n) * n);
    for (int a1 = 0; a1 < ng; ++a1)
        for (int b1 = 0; b1 < nh; ++b1)
            for (int a2 = 0; a2 < ng; ++a2)
                for (int b2 = 0; b2 < nh; ++b2) {
                    ElementId lhs = static_cast<ElementId>(a1 * nh + b1);
                    ElementId rhs = static_cast<ElementId>(a2 * nh + b2);
                    mul[static_cast<std::size_t>(lhs) * n + rhs] =
                        g.mul(static_cast<ElementId>(a1), static_cast<ElementId>(a2)) * nh +
                        h.mul(static_cast<ElementId>(b1), static_cast<ElementId>(b2));
                }
    return FiniteGroup(std::move(mul), std::move(generators), product_labels(g, h));
}

FiniteGroup semidirect_product(const FiniteGroup& g, const FiniteGroup& h,
                               const std::vector<std::vector<ElementId>>& action) {
    const int ng = g.order(), nh = h.order();
    const std::uint64_t order = static_cast<std::uint64_t>(ng) * nh;
    if (order > kMaxGroupOrder)
        throw std::invalid_argument("group capacity exceeded: product order > 2^20");
    if (static_cast<int>(action.size()) != nh)
        throw std::invalid_argument("invalid action: need one permutation of G per element of H");

    // Each phi_h must be an automorphism of G.
    for (int hh = 0; hh < nh; ++hh) {
        const auto& phi = action[hh];
        if (static_cast<int>(phi.size()) != ng)
            throw std::invalid_argument("invalid action: permutation size mismatch");
        std::vector<char> seen(ng, 0);
        for (ElementId v : phi) {
            if (v >= static_cast<ElementId>(ng) || seen[v])
                throw std::invalid_argument("invalid action: phi_h is not a permutation");
            seen[v] = 1;
        }
        for (ElementId a = 0; a < static_cast<ElementId>(ng); ++a)
            for (ElementId b = 0; b < static_cast<ElementId>(ng); ++b)
                if (phi[g.mul(a, b)] != g.mul(phi[a], phi[b]))
                    throw std::invalid_argument("invalid action: phi_h is not an automorphism");
    }
    // h -> phi_h must be a homomorphism H -> Aut(G).
    for (ElementId h1 = 0; h1 < static_cast<ElementId>(nh); ++h1)
        for (ElementId h2 = 0; h2 < static_cast<ElementId>(nh); ++h2) {
            const auto& lhs = action[h.mul(h1, h2)];
            for (ElementId a = 0; a < static_cast<ElementId>(ng); ++a)
                if (lhs[a] != action[h1][action[h2][a]])
                    throw std::invalid_argument(
                        "invalid action: h -> phi_h is not a homomorphism");
        }

    const int n = static_cast<int>(order);
    std::vector<ElementId> mul(static_cast<std::size_t>(n) * n);
    for (int a1 = 0; a1 < ng; ++a1)
        for (int b1 = 0; b1 < nh; ++b1)
            for (int a2 = 0; a2 < ng; ++a2)
                for (int b2 = 0; b2 < nh; ++b2) {
                    ElementId lhs = static_cast<ElementId>(a1 * nh + b1);
                    ElementId rhs = static_cast<ElementId>(a2 * nh + b2);
                    // (g,h)(g',h') = (g * phi_h(g'), h h')
                    ElementId gg = g.mul(static_cast<ElementId>(a1),
                                         action[b1][static_cast<ElementId>(a2)]);
                    ElementId bh = h.mul(static_cast<ElementId>(b1), static_cast<ElementId>(b2));
                    mul[static_cast<std::size_t>(lhs) * n + rhs] = gg * nh + bh;
                }
    return FiniteGroup(std::move(mul), product_generators(g, h), product_labels(g, h));
}

std::vector<ElementId> word_ball(const FiniteGroup& g, int radius) {
    std::vector<ElementId> ball;
    for (ElementId e = 0; e < static_cast<ElementId>(g.order()); ++e)
        if (g.word_dist(e) <= radius) ball.push_back(e);
    std::sort(ball.begin(), ball.end(), [&](ElementId a, ElementId b) {
        if (g.word_dist(a) != g.word_dist(b)) return g.word_dist(a) < g.word_dist(b);
        return a < b;
    });
    return ball;
}

Subgroup::Subgroup(const FiniteGroup& parent, std::vector<ElementId> members) {
    parent_ = &parent;
    std::sort(members.begin(), members.end());
    members.erase(std::unique(members.begin(), members.end()), members.end());
    members_ = std::move(members);

    local_of_parent_.assign(parent.order(), -1);
    for (std::size_t i = 0; i < members_.size(); ++i) {
        if (members_[i] >= static_cast<ElementId>(parent.order()))
            throw std::invalid_argument("invalid subgroup: member id out of range");
        local_of_parent_[members_[i]] = static_cast<std::int64_t>(i);
    }
    if (!contains(parent.identity()))
        throw std::invalid_argument("invalid subgroup: does not contain the identity");
    for (ElementId a : members_) {
        if (!contains(parent.inv(a)))
            throw std::invalid_argument("invalid subgroup: not closed under inverse");
        for (ElementId b : members_)
            if (!contains(parent.mul(a, b)))
                throw std::invalid_argument("invalid subgroup: not closed under multiplication");
    }

    // Default generating set for the materialized group: all non-identity
    // members (symmetric and generating by closure).
    std::vector<ElementId> gens;
    for (std::size_t i = 0; i < members_.size(); ++i)
        if (members_[i] != parent.identity()) gens.push_back(static_cast<ElementId>(i));
    materialize(std::move(gens));
}

Subgroup Subgroup::from_generators(const FiniteGroup& parent,
                                   const std::vector<ElementId>& gens) {
    for (ElementId g : gens)
        if (g >= static_cast<ElementId>(parent.order()))
            throw std::invalid_argument("invalid subgroup: generator id out of range");
    std::vector<char> in(parent.order(), 0);
    std::vector<ElementId> members{parent.identity()};
    in[parent.identity()] = 1;
    for (ElementId g : gens)
        if (!in[g]) {
            in[g] = 1;
            members.push_back(g);
        }
    // Closure under multiplication (inverses follow in a finite group).
    for (std::size_t i = 0; i < members.size(); ++i)
        for (std::size_t j = 0; j < members.size(); ++j) {
            ElementId p = parent.mul(members[i], members[j]);
            if (!in[p]) {
                in[p] = 1;
                members.push_back(p);
            }
        }
    Subgroup sub(parent, std::move(members));
    // Use the requested generators (closed under inverse) for the
    // materialized group's word metric.
    if (!gens.empty()) {
        std::vector<ElementId> local;
        for (ElementId g : gens) {
            local.push_back(sub.local_id(g));
            local.push_back(sub.local_id(parent.inv(g)));
        }
        std::sort(local.begin(), local.end());
        local.erase(std::unique(local.begin(), local.end()), local.end());
        sub.materialize(std::move(local));
    }
    return sub;
}

ElementId Subgroup::local_id(ElementId parent_id) const {
    std::int64_t v = local_of_parent_[parent_id];
    if (v < 0) throw std::invalid_argument("element does not belong to the subgroup");
    return static_cast<ElementId>(v);
}

void Subgroup::materialize(std::vector<ElementId> local_generators) {
    const int m = order();
    std::vector<ElementId> mul(static_cast<std::size_t>(m) * m);
    std::vector<std::string> labels(m);
    for (int a = 0; a < m; ++a) {
        labels[a] = parent_->label(members_[a]);
        for (int b = 0; b < m; ++b)
            mul[static_cast<std::size_t>(a) * m + b] = local_id(
                parent_->mul(members_[a], members_[b]));
    }
    group_ = std::make_shared<FiniteGroup>(std::move(mul), std::move(local_generators),
                                           std::move(labels));
}

CosetPartition right_cosets(const FiniteGroup& g, const Subgroup& h) {
    if (&h.parent() != &g)
        throw std::invalid_argument("group mismatch: subgroup belongs to a different group");
    CosetPartition part{h, {}, {}, {}};

    std::vector<int> coset_of(g.order(), -1);
    for (ElementId e = 0; e < static_cast<ElementId>(g.order()); ++e) {
        if (coset_of[e] >= 0) continue;
        std::vector<ElementId> coset;
        for (ElementId m : h.member_ids()) {
            ElementId x = g.mul(m, e);
            coset_of[x] = static_cast<int>(part.cosets.size());
            coset.push_back(x);
        }
        std::sort(coset.begin(), coset.end());
        // Representative at minimal word distance, ties -> smallest id;
        // the sorted scan with strict improvement gives exactly that.
        ElementId rep = coset[0];
        for (ElementId x : coset)
            if (g.word_dist(x) < g.word_dist(rep)) rep = x;
        part.cosets.push_back(std::move(coset));
        part.representatives.push_back(rep);
    }

    part.partitions.resize(h.order());
    for (int local = 0; local < h.order(); ++local) {
        ElementId hh = h.parent_id(static_cast<ElementId>(local));
        for (ElementId rep : part.representatives)
            part.partitions[local].push_back(g.mul(hh, rep));
    }
    return part;
}

HomogeneousSpace::HomogeneousSpace(const FiniteGroup& group, Subgroup stabilizer,
                                   RepPolicy policy)
    : group_(&group), stabilizer_(std::move(stabilizer)) {
    if (&stabilizer_.parent() != &group)
        throw std::invalid_argument("group mismatch: stabilizer belongs to a different group");
    coset_index_.assign(group.order(), -1);
    for (ElementId e = 0; e < static_cast<ElementId>(group.order()); ++e) {
        if (coset_index_[e] >= 0) continue;
        std::vector<ElementId> coset;  // left coset e*H
        for (ElementId m : stabilizer_.member_ids()) coset.push_back(group.mul(e, m));
        std::sort(coset.begin(), coset.end());
        ElementId rep = coset[0];
        for (ElementId x : coset) {
            if (policy == RepPolicy::ClosestToIdentity) {
                if (group.word_dist(x) < group.word_dist(rep)) rep = x;
            } else {
                if (x > rep) rep = x;
            }
        }
        int idx = static_cast<int>(reps_.size());
        reps_.push_back(rep);
        for (ElementId x : coset) coset_index_[x] = idx;
    }
}

}  // namespace gm
