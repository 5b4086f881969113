#include "gm/group_spec.hpp"

#include <cctype>

namespace gm {

namespace {

struct Parser {
    const std::string& text;
    std::size_t pos = 0;

    bool done() const { return pos >= text.size(); }
    char peek() const { return text[pos]; }

    FiniteGroup parse_atom() {
        if (done()) throw GroupSpecError("expected group atom", pos);
        char kind = peek();
        if (kind != 'C' && kind != 'D' && kind != 'S')
            throw GroupSpecError("expected 'C', 'D' or 'S'", pos);
        ++pos;
        if (done() || !std::isdigit(static_cast<unsigned char>(peek())))
            throw GroupSpecError("expected integer after group kind", pos);
        long n = 0;
        while (!done() && std::isdigit(static_cast<unsigned char>(peek()))) {
            n = n * 10 + (peek() - '0');
            if (n > static_cast<long>(kMaxGroupOrder))
                throw GroupSpecError("group order too large", pos);
            ++pos;
        }
        switch (kind) {
            case 'C': return make_cyclic(static_cast<int>(n));
            case 'D': return make_dihedral(static_cast<int>(n));
            default: return make_symmetric(static_cast<int>(n));
        }
    }

    std::string parse_action_name() {
        std::size_t start = pos;
        std::string name;
        while (!done() && peek() != ':') {
            name += peek();
            ++pos;
        }
        if (done()) throw GroupSpecError("unterminated ':name:' operator", start);
        ++pos;  // trailing ':'
        if (name.empty()) throw GroupSpecError("empty automorphism name", start);
        return name;
    }
};

std::vector<std::vector<ElementId>> named_action(const std::string& name,
                                                 const FiniteGroup& g,
                                                 const FiniteGroup& h,
                                                 std::size_t pos) {
    if (name != "inv")
        throw GroupSpecError("unknown automorphism name '" + name + "'", pos);
    std::vector<ElementId> identity(g.order()), inversion(g.order());
    for (ElementId e = 0; e < static_cast<ElementId>(g.order()); ++e) {
        identity[e] = e;
        inversion[e] = g.inv(e);
    }
    std::vector<std::vector<ElementId>> action(h.order());
    for (ElementId e = 0; e < static_cast<ElementId>(h.order()); ++e)
        action[e] = (e == h.identity()) ? identity : inversion;
    return action;
}

}  // namespace

FiniteGroup parse_group_spec(const std::string& spec) {
    Parser p{spec};
    FiniteGroup acc = p.parse_atom();
    while (!p.done()) {
        char op = p.peek();
        if (op == 'x') {
            ++p.pos;
            FiniteGroup rhs = p.parse_atom();
            acc = direct_product(acc, rhs);
        } else if (op == ':') {
            std::size_t op_pos = p.pos;
            ++p.pos;
            std::string name = p.parse_action_name();
            FiniteGroup rhs = p.parse_atom();
            acc = semidirect_product(acc, rhs, named_action(name, acc, rhs, op_pos));
        } else {
            throw GroupSpecError("expected 'x' or ':name:' operator", p.pos);
        }
    }
    return acc;
}

}  // namespace gm
