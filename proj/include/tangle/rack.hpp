#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tangle/errors.hpp"

namespace tangle {

// Finite rack (Q, ⊳) on elements 0..n-1. For every y, the column map
// x ↦ x ⊳ y is a bijection whose inverse is written x ⊲ y, and the
// self-distributivity law (x⊳y)⊳z = (x⊳z)⊳(y⊳z) holds. A quandle
// additionally satisfies x ⊳ x = x for all x.
class Rack {
public:
    // Builders. Each validates the axioms of the constructed table.
    static Rack dihedral(int n);                 // x⊳y = 2y - x mod n
    static Rack alexander(int n, int t);         // x⊳y = (1-t)x + ty mod n
    static Rack conjugation(const std::vector<std::vector<int>>& group_table);
    static Rack constant_action(const std::vector<int>& sigma);
    static Rack trivial(int n);                  // x⊳y = x
    static Rack from_table(const std::vector<std::vector<int>>& table,
                           std::string name = "explicit");

    int size() const { return n_; }
    const std::string& name() const { return name_; }

    int op(int x, int y) const   { check(x); check(y); return table_[x][y]; }    // x ⊳ y
    int inv(int x, int y) const  { check(x); check(y); return inverse_[x][y]; }  // x ⊲ y
    // x ⊳ y when sign > 0, x ⊲ y when sign < 0.
    int act(int x, int y, int sign) const { return sign >= 0 ? op(x, y) : inv(x, y); }

    bool is_quandle() const { return quandle_; }

    // Column permutation x ↦ x⊳y as a vector.
    std::vector<int> column(int y) const;

    // Inner automorphism group = closure of all column permutations under
    // composition (BFS). Throws GroupTooLarge past `budget` elements.
    // Returns the element list; elements are permutations of 0..n-1 and
    // element 0 is the identity.
    std::vector<std::vector<int>> inner_group(std::size_t budget = 100000) const;

    // Elementary divisors of the abelianization of inner_group(), ascending
    // prime-power factors (e.g. Z₂ → {2}; trivial → {}).
    std::vector<int> abelianized_inner(std::size_t budget = 100000) const;

    bool operator==(const Rack& o) const { return table_ == o.table_; }

private:
    Rack(std::vector<std::vector<int>> table, std::string name);
    void check(int x) const {
        if (x < 0 || x >= n_)
            throw ColourOutOfRange("colour " + std::to_string(x) +
                                   " outside rack of size " + std::to_string(n_));
    }

    int n_ = 0;
    bool quandle_ = false;
    std::string name_;
    std::vector<std::vector<int>> table_;    // table_[x][y] = x ⊳ y
    std::vector<std::vector<int>> inverse_;  // inverse_[x][y] = x ⊲ y
};

namespace perm {
// Helpers shared by rack group machinery and tests.
std::vector<int> compose(const std::vector<int>& f, const std::vector<int>& g); // x ↦ f[g[x]]
std::vector<int> inverse(const std::vector<int>& f);
std::vector<int> identity(int n);

// Closure of `gens` under composition (and hence inverses, the set being
// finite). Deterministic element order: BFS from the identity, generators
// applied in the given order. Throws GroupTooLarge past `budget`.
std::vector<std::vector<int>> closure(const std::vector<std::vector<int>>& gens,
                                      int n, std::size_t budget);

// Elementary divisors (ascending prime powers) of the abelianization of the
// group generated by `gens`: the quotient of the closure by its derived
// subgroup (closure of commutators, conjugation-stabilized).
std::vector<int> abelianization_divisors(const std::vector<std::vector<int>>& gens,
                                         int n, std::size_t budget);
} // namespace perm

} // namespace tangle
