#pragma once

#include <stdexcept>
#include <string>

#include "gm/group.hpp"

namespace gm {

/// Parse error carrying the offending position in the spec string.
class GroupSpecError : public std::invalid_argument {
public:
    GroupSpecError(const std::string& message, std::size_t position)
        : std::invalid_argument(message + " at position " + std::to_string(position)),
          position_(position) {}
    std::size_t position() const { return position_; }

private:
    std::size_t position_;
};

/// Build a group from a spec string.
///
/// Grammar (left-associative):
///   group := atom (('x' | ':' name ':') atom)*
///   atom  := ('C' | 'D' | 'S') integer
///
/// 'x' is the direct product; ':name:' a semidirect product using a named
/// automorphism action of the right atom on the accumulated left group.
/// The one built-in name is "inv", which sends every non-identity element
/// of the right factor to inversion on the left factor (the D_n
/// construction when the right factor is C2); unsuitable combinations are
/// rejected by the semidirect validity checks.
FiniteGroup parse_group_spec(const std::string& spec);

}  // namespace gm
