#include "tangle/rack.hpp"

#include <map>
#include <numeric>
#include <queue>
#include <set>

namespace tangle {

namespace perm {

std::vector<int> compose(const std::vector<int>& f, const std::vector<int>& g) {
    std::vector<int> h(g.size());
    for (std::size_t x = 0; x < g.size(); ++x) h[x] = f[g[x]];
    return h;
}

std::vector<int> inverse(const std::vector<int>& f) {
    std::vector<int> h(f.size());
    for (std::size_t x = 0; x < f.size(); ++x) h[f[x]] = static_cast<int>(x);
    return h;
}

std::vector<int> identity(int n) {
    std::vector<int> h(n);
    std::iota(h.begin(), h.end(), 0);
    return h;
}

std::vector<std::vector<int>> closure(const std::vector<std::vector<int>>& gens,
                                      int n, std::size_t budget) {
    std::vector<std::vector<int>> elements;
    std::set<std::vector<int>> seen;
    std::queue<std::vector<int>> todo;
    auto push = [&](std::vector<int> p) {
        if (seen.insert(p).second) {
            if (seen.size() > budget)
                throw GroupTooLarge("group closure exceeds budget of " +
                                    std::to_string(budget) + " elements");
            elements.push_back(p);
            todo.push(std::move(p));
        }
    };
    push(identity(n));
    while (!todo.empty()) {
        std::vector<int> cur = todo.front();
        todo.pop();
        for (const auto& g : gens) push(compose(cur, g));
    }
    return elements;
}

namespace {

// Multiplication structure of the quotient of `group` by the subgroup
// generated by all commutators. Returns coset count, coset multiplication
// table, and the identity coset (always index of the identity's coset).
struct Quotient {
    int size = 1;
    std::vector<std::vector<int>> mul;
    int id = 0;
};

Quotient abelian_quotient(const std::vector<std::vector<int>>& group) {
    std::map<std::vector<int>, int> index;
    for (std::size_t i = 0; i < group.size(); ++i) index[group[i]] = static_cast<int>(i);

    std::vector<std::vector<int>> commutators;
    for (const auto& g : group)
        for (const auto& h : group) {
            auto c = compose(compose(inverse(g), inverse(h)), compose(g, h));
            commutators.push_back(std::move(c));
        }
    auto derived = closure(commutators, static_cast<int>(group[0].size()),
                           group.size());

    std::vector<int> coset_of(group.size(), -1);
    int ncosets = 0;
    for (std::size_t i = 0; i < group.size(); ++i) {
        if (coset_of[i] >= 0) continue;
        int c = ncosets++;
        for (const auto& d : derived) coset_of[index.at(compose(group[i], d))] = c;
    }

    Quotient q;
    q.size = ncosets;
    q.mul.assign(ncosets, std::vector<int>(ncosets, -1));
    std::vector<int> rep(ncosets, -1);
    for (std::size_t i = 0; i < group.size(); ++i)
        if (rep[coset_of[i]] < 0) rep[coset_of[i]] = static_cast<int>(i);
    for (int a = 0; a < ncosets; ++a)
        for (int b = 0; b < ncosets; ++b)
            q.mul[a][b] = coset_of[index.at(compose(group[rep[a]], group[rep[b]]))];
    q.id = coset_of[index.at(identity(static_cast<int>(group[0].size())))];
    return q;
}

int qpow(const Quotient& q, int x, long long e) {
    int acc = q.id;
    for (long long i = 0; i < e; ++i) acc = q.mul[acc][x];
    return acc;
}

} // namespace

std::vector<int> abelianization_divisors(const std::vector<std::vector<int>>& gens,
                                         int n, std::size_t budget) {
    auto group = closure(gens, n, budget);
    Quotient q = abelian_quotient(group);

    std::vector<int> divisors;
    int m = q.size;
    for (int p = 2; p <= m; ++p) {
        if (m % p != 0) continue;
        while (m % p == 0) m /= p;
        // count solutions of x^(p^k) = e to read off the p-power factors
        std::vector<long long> counts = {1};
        long long pk = 1;
        while (true) {
            pk *= p;
            long long c = 0;
            for (int x = 0; x < q.size; ++x)
                if (qpow(q, x, pk) == q.id) ++c;
            if (c == counts.back()) break;
            counts.push_back(c);
        }
        std::vector<int> lambda; // lambda[k] = #cyclic p-factors of exponent >= k+1
        for (std::size_t k = 1; k < counts.size(); ++k) {
            long long ratio = counts[k] / counts[k - 1];
            int l = 0;
            while (ratio > 1) {
                ratio /= p;
                ++l;
            }
            lambda.push_back(l);
        }
        long long power = 1;
        for (std::size_t k = 0; k < lambda.size(); ++k) {
            power *= p;
            int next = k + 1 < lambda.size() ? lambda[k + 1] : 0;
            for (int i = 0; i < lambda[k] - next; ++i)
                divisors.push_back(static_cast<int>(power));
        }
    }
    std::sort(divisors.begin(), divisors.end());
    return divisors;
}

} // namespace perm

Rack::Rack(std::vector<std::vector<int>> table, std::string name)
    : n_(static_cast<int>(table.size())), name_(std::move(name)), table_(std::move(table)) {
    if (n_ <= 0) throw BadParameter("rack size must be positive");
    for (const auto& row : table_)
        if (static_cast<int>(row.size()) != n_)
            throw BadParameter("rack table is not square");
    for (const auto& row : table_)
        for (int v : row)
            if (v < 0 || v >= n_)
                throw ColourOutOfRange("table entry " + std::to_string(v) +
                                       " outside rack of size " + std::to_string(n_));

    inverse_.assign(n_, std::vector<int>(n_, -1));
    for (int y = 0; y < n_; ++y) {
        for (int x = 0; x < n_; ++x) {
            int v = table_[x][y];
            if (inverse_[v][y] != -1)
                throw AxiomViolation("operation by " + std::to_string(y) +
                                     " is not a bijection");
            inverse_[v][y] = x;
        }
    }

    for (int a = 0; a < n_; ++a)
        for (int b = 0; b < n_; ++b)
            for (int c = 0; c < n_; ++c)
                if (table_[table_[a][b]][c] != table_[table_[a][c]][table_[b][c]])
                    throw AxiomViolation("self-distributivity fails at (" +
                                         std::to_string(a) + "," + std::to_string(b) +
                                         "," + std::to_string(c) + ")");

    quandle_ = true;
    for (int x = 0; x < n_; ++x) quandle_ = quandle_ && table_[x][x] == x;
}

Rack Rack::dihedral(int n) {
    if (n <= 0) throw BadParameter("dihedral rack needs n > 0");
    std::vector<std::vector<int>> t(n, std::vector<int>(n));
    for (int x = 0; x < n; ++x)
        for (int y = 0; y < n; ++y) t[x][y] = ((2 * y - x) % n + n) % n;
    return Rack(std::move(t), "dihedral " + std::to_string(n));
}

Rack Rack::alexander(int n, int t) {
    if (n <= 0) throw BadParameter("alexander rack needs n > 0");
    int tt = ((t % n) + n) % n;
    if (std::gcd(tt, n) != 1)
        throw AxiomViolation("alexander parameter t = " + std::to_string(t) +
                             " is not a unit modulo " + std::to_string(n));
    int u = (((1 - tt) % n) + n) % n;
    if (std::gcd(u, n) != 1)
        throw AxiomViolation("alexander parameter 1 - t is not a unit modulo " +
                             std::to_string(n));
    std::vector<std::vector<int>> tab(n, std::vector<int>(n));
    for (int x = 0; x < n; ++x)
        for (int y = 0; y < n; ++y) tab[x][y] = (u * x + tt * y) % n;
    return Rack(std::move(tab),
                "alexander " + std::to_string(n) + " " + std::to_string(t));
}

Rack Rack::conjugation(const std::vector<std::vector<int>>& group_table) {
    int n = static_cast<int>(group_table.size());
    if (n <= 0) throw BadParameter("conjugation rack needs a nonempty group");
    for (const auto& row : group_table)
        if (static_cast<int>(row.size()) != n)
            throw BadParameter("group table is not square");
    for (const auto& row : group_table)
        for (int v : row)
            if (v < 0 || v >= n)
                throw ColourOutOfRange("group table entry " + std::to_string(v) +
                                       " outside group of size " + std::to_string(n));

    int e = -1;
    for (int g = 0; g < n && e < 0; ++g) {
        bool id = true;
        for (int x = 0; x < n; ++x)
            id = id && group_table[g][x] == x && group_table[x][g] == x;
        if (id) e = g;
    }
    if (e < 0) throw AxiomViolation("group table has no identity element");
    std::vector<int> inv(n, -1);
    for (int g = 0; g < n; ++g)
        for (int h = 0; h < n; ++h)
            if (group_table[g][h] == e) inv[g] = h;
    for (int g = 0; g < n; ++g)
        if (inv[g] < 0) throw AxiomViolation("group table has no inverse for " +
                                             std::to_string(g));

    std::vector<std::vector<int>> t(n, std::vector<int>(n));
    for (int g = 0; g < n; ++g)
        for (int h = 0; h < n; ++h)
            t[g][h] = group_table[group_table[inv[h]][g]][h]; // h^-1 g h

    std::string name = "conjugation " + std::to_string(n);
    for (const auto& row : group_table)
        for (int v : row) name += " " + std::to_string(v);
    return Rack(std::move(t), std::move(name));
}

Rack Rack::constant_action(const std::vector<int>& sigma) {
    int n = static_cast<int>(sigma.size());
    if (n <= 0) throw BadParameter("constant-action rack needs a nonempty map");
    for (int v : sigma)
        if (v < 0 || v >= n)
            throw ColourOutOfRange("map entry " + std::to_string(v) +
                                   " outside rack of size " + std::to_string(n));
    std::vector<std::vector<int>> t(n, std::vector<int>(n));
    for (int x = 0; x < n; ++x)
        for (int y = 0; y < n; ++y) t[x][y] = sigma[x];
    std::string name = "constant";
    for (int v : sigma) name += " " + std::to_string(v);
    return Rack(std::move(t), std::move(name));
}

Rack Rack::trivial(int n) {
    if (n <= 0) throw BadParameter("trivial rack needs n > 0");
    std::vector<std::vector<int>> t(n, std::vector<int>(n));
    for (int x = 0; x < n; ++x)
        for (int y = 0; y < n; ++y) t[x][y] = x;
    return Rack(std::move(t), "trivial " + std::to_string(n));
}

Rack Rack::from_table(const std::vector<std::vector<int>>& table, std::string) {
    // The canonical name always embeds the table so declarations round-trip.
    std::string name = "table " + std::to_string(table.size());
    for (const auto& row : table)
        for (int v : row) name += " " + std::to_string(v);
    return Rack(table, std::move(name));
}

std::vector<int> Rack::column(int y) const {
    check(y);
    std::vector<int> c(n_);
    for (int x = 0; x < n_; ++x) c[x] = table_[x][y];
    return c;
}

std::vector<std::vector<int>> Rack::inner_group(std::size_t budget) const {
    std::vector<std::vector<int>> gens;
    for (int y = 0; y < n_; ++y) gens.push_back(column(y));
    return perm::closure(gens, n_, budget);
}

std::vector<int> Rack::abelianized_inner(std::size_t budget) const {
    std::vector<std::vector<int>> gens;
    for (int y = 0; y < n_; ++y) gens.push_back(column(y));
    return perm::abelianization_divisors(gens, n_, budget);
}

} // namespace tangle
