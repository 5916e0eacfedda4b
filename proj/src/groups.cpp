#include "symshrink/groups.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>
#include <unordered_set>

#include "symshrink/error.hpp"

namespace symshrink {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

class UnionFind {
public:
    explicit UnionFind(std::size_t n) : parent_(n), size_(n, 1) {
        std::iota(parent_.begin(), parent_.end(), std::uint32_t{0});
    }
    std::uint32_t find(std::uint32_t x) {
        while (parent_[x] != x) {
            parent_[x] = parent_[parent_[x]];
            x = parent_[x];
        }
        return x;
    }
    void unite(std::uint32_t a, std::uint32_t b) {
        a = find(a);
        b = find(b);
        if (a == b) return;
        if (size_[a] < size_[b]) std::swap(a, b);
        parent_[b] = a;
        size_[a] += size_[b];
    }

private:
    std::vector<std::uint32_t> parent_;
    std::vector<std::uint32_t> size_;
};

// Relabels union-find roots as 0, 1, 2, ... in order of first appearance.
std::size_t compact_labels(UnionFind& uf, std::vector<std::uint32_t>& out) {
    const std::size_t n = out.size();
    std::vector<std::uint32_t> label(n, std::numeric_limits<std::uint32_t>::max());
    std::uint32_t next = 0;
    for (std::size_t k = 0; k < n; ++k) {
        const std::uint32_t r = uf.find(static_cast<std::uint32_t>(k));
        if (label[r] == std::numeric_limits<std::uint32_t>::max()) label[r] = next++;
        out[k] = label[r];
    }
    return next;
}

bool is_plain_integer(const std::string& s) {
    return !s.empty() && std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isdigit(c); });
}

std::string order_power(const std::string& base, std::size_t exponent) {
    if (exponent == 1) return base;
    const std::string b = is_plain_integer(base) ? base : "(" + base + ")";
    return b + "^" + std::to_string(exponent);
}

std::string order_product(const std::string& a, const std::string& b) {
    if (a.empty() || b.empty()) return "";
    if (a == "1") return b;
    if (b == "1") return a;
    return a + "·" + b;
}

std::string factorial_text(std::size_t k) { return k <= 1 ? "1" : std::to_string(k) + "!"; }

std::vector<Permutation> lift_to_blocks(const std::vector<Permutation>& base_generators,
                                        const std::vector<std::uint32_t>& block, std::size_t m) {
    std::vector<Permutation> out;
    for (const auto& p : base_generators) {
        Permutation g(m);
        std::iota(g.begin(), g.end(), std::uint32_t{0});
        for (std::size_t k = 0; k < block.size(); ++k) g[block[k]] = block[p[k]];
        out.push_back(std::move(g));
    }
    return out;
}

void validate_blocks(const std::vector<std::vector<std::uint32_t>>& blocks, std::size_t block_size,
                     const char* who) {
    if (blocks.empty()) throw ConfigError(std::string(who) + ": no blocks");
    std::size_t m = 0;
    for (const auto& b : blocks) {
        if (block_size != 0 && b.size() != block_size) {
            throw DimensionError(std::string(who) + ": block of size " + std::to_string(b.size()) +
                                 " does not match the base action of size " + std::to_string(block_size));
        }
        m += b.size();
    }
    std::vector<char> seen(m, 0);
    for (const auto& b : blocks) {
        for (auto i : b) {
            if (i >= m || seen[i]) throw ConfigError(std::string(who) + ": blocks do not partition {0..M-1}");
            seen[i] = 1;
        }
    }
}

std::size_t total_size(const std::vector<std::vector<std::uint32_t>>& blocks) {
    std::size_t m = 0;
    for (const auto& b : blocks) m += b.size();
    return m;
}

const GroupAction& require_permutation_base(const GroupAction& base, const char* who) {
    if (base.kind() == GroupKind::FullSymmetric || base.kind() == GroupKind::HaarOrthogonal) {
        throw ConfigError(std::string(who) + ": base action must be generator based");
    }
    return base;
}

// ---- symbolic order parser (log10 domain) ----

class OrderParser {
public:
    explicit OrderParser(std::string_view s) : s_(s) {}

    double parse() {
        skip_space();
        if (consume("inf") || consume("∞")) return finish(kInf);
        if (consume(">=") || consume("≥")) skip_space();
        const double v = product();
        return finish(v);
    }

private:
    double finish(double v) {
        skip_space();
        return pos_ == s_.size() ? v : std::numeric_limits<double>::quiet_NaN();
    }

    double product() {
        double acc = power();
        for (;;) {
            skip_space();
            if (consume("·") || consume("*")) {
                acc += power();
            } else {
                return acc;
            }
        }
    }

    double power() {
        const double base = factorial();
        skip_space();
        if (consume("^")) {
            const double exponent_log = factorial();
            return base * std::pow(10.0, exponent_log);
        }
        return base;
    }

    double factorial() {
        double v = atom();
        for (;;) {
            skip_space();
            if (!consume("!")) return v;
            const double n = std::pow(10.0, v);
            v = std::lgamma(std::round(n) + 1.0) / std::log(10.0);
        }
    }

    double atom() {
        skip_space();
        if (consume("(")) {
            const double v = product();
            skip_space();
            if (!consume(")")) fail();
            return v;
        }
        const std::size_t start = pos_;
        while (pos_ < s_.size() && (std::isdigit(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '.' ||
                                    s_[pos_] == 'e' || s_[pos_] == 'E')) {
            ++pos_;
        }
        if (start == pos_) fail();
        const double n = std::stod(std::string(s_.substr(start, pos_ - start)));
        if (!(n >= 1.0)) fail();
        return std::log10(n);
    }

    bool consume(std::string_view tok) {
        if (s_.substr(pos_, tok.size()) == tok) {
            pos_ += tok.size();
            return true;
        }
        return false;
    }
    void skip_space() {
        while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
    }
    [[noreturn]] void fail() { throw std::invalid_argument("order"); }

    std::string_view s_;
    std::size_t pos_ = 0;
};

std::uint64_t hash_bytes(const std::uint8_t* p, std::size_t n) {
    std::uint64_t h = 1469598103934665603ULL;
    for (std::size_t i = 0; i < n; ++i) {
        h ^= p[i];
        h *= 1099511628211ULL;
    }
    return h;
}

std::string trim(std::string_view s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return std::string(s.substr(b, e - b));
}

std::pair<std::size_t, std::size_t> parse_pair(std::string_view arg, std::string_view spec) {
    const auto x = arg.find('x');
    if (x == std::string_view::npos) throw ConfigError("group '" + std::string(spec) + "': expected AxB");
    try {
        return {std::stoul(std::string(arg.substr(0, x))), std::stoul(std::string(arg.substr(x + 1)))};
    } catch (const std::exception&) {
        throw ConfigError("group '" + std::string(spec) + "': expected AxB");
    }
}

void require_dim(std::size_t want, std::size_t have, std::string_view spec) {
    if (want != have) {
        throw DimensionError("group '" + std::string(spec) + "' has dimension " + std::to_string(want) +
                             " but the data has " + std::to_string(have));
    }
}

}  // namespace

std::string_view to_string(GroupKind kind) noexcept {
    switch (kind) {
        case GroupKind::GeneratorBased: return "GeneratorBased";
        case GroupKind::FullSymmetric: return "FullSymmetric";
        case GroupKind::HaarOrthogonal: return "HaarOrthogonal";
        case GroupKind::Trivial: return "Trivial";
    }
    return "Trivial";
}

GroupKind parse_group_kind(std::string_view text) {
    for (auto k : {GroupKind::GeneratorBased, GroupKind::FullSymmetric, GroupKind::HaarOrthogonal,
                   GroupKind::Trivial}) {
        if (text == to_string(k)) return k;
    }
    throw ConfigError("unknown group kind '" + std::string(text) + "'");
}

void validate_permutation(const Permutation& p, std::size_t dim) {
    if (p.size() != dim) {
        throw ConfigError("generator has length " + std::to_string(p.size()) + ", expected " +
                          std::to_string(dim));
    }
    std::vector<char> hit(dim, 0);
    for (auto v : p) {
        if (v >= dim || hit[v]) throw ConfigError("generator is not a permutation of {0..M-1}");
        hit[v] = 1;
    }
}

GroupAction GroupAction::trivial(std::size_t dim, std::string name) {
    if (dim == 0) throw ConfigError("group dimension must be positive");
    GroupAction g;
    g.name_ = std::move(name);
    g.dim_ = dim;
    g.kind_ = GroupKind::Trivial;
    g.order_description_ = "1";
    g.partition_ = std::make_shared<const OrbitPartition>(orbit_partition(g));
    return g;
}

GroupAction GroupAction::full_symmetric(std::size_t dim, std::string name) {
    if (dim == 0) throw ConfigError("group dimension must be positive");
    GroupAction g;
    g.name_ = std::move(name);
    g.dim_ = dim;
    g.kind_ = GroupKind::FullSymmetric;
    g.order_description_ = factorial_text(dim);
    return g;
}

GroupAction GroupAction::haar_orthogonal(std::size_t dim, std::string name) {
    if (dim == 0) throw ConfigError("group dimension must be positive");
    GroupAction g;
    g.name_ = std::move(name);
    g.dim_ = dim;
    g.kind_ = GroupKind::HaarOrthogonal;
    g.order_description_ = "inf";
    return g;
}

GroupAction GroupAction::from_generators(std::string name, std::size_t dim,
                                         std::vector<Permutation> generators,
                                         std::string order_description) {
    if (dim == 0) throw ConfigError("group dimension must be positive");
    for (const auto& p : generators) validate_permutation(p, dim);
    if (generators.empty()) return trivial(dim, std::move(name));
    GroupAction g;
    g.name_ = std::move(name);
    g.dim_ = dim;
    g.kind_ = GroupKind::GeneratorBased;
    g.generators_ = std::move(generators);
    g.order_description_ = std::move(order_description);
    g.partition_ = std::make_shared<const OrbitPartition>(orbit_partition(g));
    return g;
}

double GroupAction::order_log10_lower_bound() const {
    if (kind_ == GroupKind::FullSymmetric || kind_ == GroupKind::HaarOrthogonal) return kInf;
    if (kind_ == GroupKind::Trivial) return 0.0;
    const double parsed = parse_order_log10(order_description_);
    if (!std::isnan(parsed)) return parsed;
    return std::log10(static_cast<double>(generators_.size() + 1));
}

const OrbitPartition& GroupAction::partition() const {
    if (!partition_) throw ConfigError("group '" + name_ + "' has a closed-form projector and no orbit partition");
    return *partition_;
}

GroupAction GroupAction::renamed(std::string name) const {
    GroupAction g = *this;
    g.name_ = std::move(name);
    return g;
}

OrbitPartition orbit_partition(const GroupAction& g) {
    if (g.kind() == GroupKind::FullSymmetric || g.kind() == GroupKind::HaarOrthogonal) {
        throw ConfigError("orbit_partition requires a generator-based or trivial action");
    }
    const std::size_t m = g.dim();
    const std::size_t n = m * m;
    UnionFind uf(n);
    for (const auto& p : g.generators()) {
        validate_permutation(p, m);
        for (std::size_t i = 0; i < m; ++i) {
            const std::size_t pi = p[i];
            for (std::size_t j = 0; j < m; ++j) {
                uf.unite(static_cast<std::uint32_t>(i * m + j), static_cast<std::uint32_t>(pi * m + p[j]));
            }
        }
    }
    OrbitPartition out;
    out.dim = m;
    out.class_of.resize(n);
    out.n_classes = compact_labels(uf, out.class_of);

    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = i + 1; j < m; ++j) {
            uf.unite(static_cast<std::uint32_t>(i * m + j), static_cast<std::uint32_t>(j * m + i));
        }
    }
    out.sym_class_of.resize(n);
    out.d_g = compact_labels(uf, out.sym_class_of);
    out.sym_class_size.assign(out.d_g, 0);
    for (auto c : out.sym_class_of) ++out.sym_class_size[c];
    return out;
}

SymmetricMatrix reynolds_project(const GroupAction& g, const SymmetricMatrix& a) {
    if (g.dim() != a.dim()) {
        throw DimensionError("reynolds_project: group '" + g.name() + "' acts on " + std::to_string(g.dim()) +
                             " indices but the matrix is " + std::to_string(a.dim()) + "x" +
                             std::to_string(a.dim()));
    }
    const std::size_t m = a.dim();
    switch (g.kind()) {
        case GroupKind::Trivial:
            return a;
        case GroupKind::HaarOrthogonal:
            return SymmetricMatrix::identity(m, a.trace() / static_cast<double>(m));
        case GroupKind::FullSymmetric: {
            if (m == 1) return a;
            const double diag = a.trace() / static_cast<double>(m);
            double total = 0.0;
            for (double v : a.entries()) total += v;
            const double off = (total - a.trace()) / static_cast<double>(m * (m - 1));
            std::vector<double> e(m * m, off);
            for (std::size_t i = 0; i < m; ++i) e[i * m + i] = diag;
            return SymmetricMatrix(m, std::move(e));
        }
        case GroupKind::GeneratorBased: {
            const OrbitPartition& p = g.partition();
            std::vector<double> sums(p.d_g, 0.0);
            const auto src = a.entries();
            for (std::size_t k = 0; k < src.size(); ++k) sums[p.sym_class_of[k]] += src[k];
            for (std::size_t c = 0; c < p.d_g; ++c) sums[c] /= static_cast<double>(p.sym_class_size[c]);
            std::vector<double> e(m * m);
            for (std::size_t k = 0; k < e.size(); ++k) e[k] = sums[p.sym_class_of[k]];
            return SymmetricMatrix(m, std::move(e));
        }
    }
    return a;
}

double parse_order_log10(std::string_view text) {
    const std::string t = trim(text);
    if (t.empty()) return std::numeric_limits<double>::quiet_NaN();
    try {
        return OrderParser(t).parse();
    } catch (const std::exception&) {
        return std::numeric_limits<double>::quiet_NaN();
    }
}

// ---- constructors ----

Permutation cyclic_shift(std::size_t k) {
    Permutation p(k);
    for (std::size_t i = 0; i < k; ++i) p[i] = static_cast<std::uint32_t>((i + 1) % k);
    return p;
}

std::vector<Permutation> adjacent_transpositions(std::size_t k) {
    std::vector<Permutation> out;
    for (std::size_t i = 0; i + 1 < k; ++i) {
        Permutation p(k);
        std::iota(p.begin(), p.end(), std::uint32_t{0});
        std::swap(p[i], p[i + 1]);
        out.push_back(std::move(p));
    }
    return out;
}

GroupAction cyclic(std::size_t m, std::string name) {
    if (name.empty()) name = "Z" + std::to_string(m);
    if (m == 1) return GroupAction::trivial(1, std::move(name));
    return GroupAction::from_generators(std::move(name), m, {cyclic_shift(m)}, std::to_string(m));
}

GroupAction symmetric_by_generators(std::size_t m, std::string name) {
    if (name.empty()) name = "S" + std::to_string(m) + "-gen";
    return GroupAction::from_generators(std::move(name), m, adjacent_transpositions(m), factorial_text(m));
}

GroupAction swap_pair(std::size_t m, std::size_t a, std::size_t b, std::string name) {
    if (a >= m || b >= m || a == b) throw ConfigError("swap_pair: indices must be distinct and below M");
    if (name.empty()) name = "swap-" + std::to_string(a) + "-" + std::to_string(b);
    Permutation p(m);
    std::iota(p.begin(), p.end(), std::uint32_t{0});
    std::swap(p[a], p[b]);
    return GroupAction::from_generators(std::move(name), m, {p}, "2");
}

GroupAction direct_product(const GroupAction& g1, const GroupAction& g2, std::string name) {
    require_permutation_base(g1, "direct_product");
    require_permutation_base(g2, "direct_product");
    const std::size_t h = g1.dim(), w = g2.dim(), m = h * w;
    if (name.empty()) name = g1.name() + "x" + g2.name();
    std::vector<Permutation> gens;
    for (const auto& p : g1.generators()) {
        Permutation q(m);
        for (std::size_t r = 0; r < h; ++r)
            for (std::size_t c = 0; c < w; ++c) q[r * w + c] = static_cast<std::uint32_t>(p[r] * w + c);
        gens.push_back(std::move(q));
    }
    for (const auto& p : g2.generators()) {
        Permutation q(m);
        for (std::size_t r = 0; r < h; ++r)
            for (std::size_t c = 0; c < w; ++c) q[r * w + c] = static_cast<std::uint32_t>(r * w + p[c]);
        gens.push_back(std::move(q));
    }
    return GroupAction::from_generators(std::move(name), m, std::move(gens),
                                        order_product(g1.order_description(), g2.order_description()));
}

GroupAction grid_cyclic_rows(std::size_t h, std::size_t w, std::string name) {
    if (name.empty()) name = "Z" + std::to_string(h) + "-lat";
    return direct_product(cyclic(h), GroupAction::trivial(w), std::move(name));
}

GroupAction grid_cyclic_columns(std::size_t h, std::size_t w, std::string name) {
    if (name.empty()) name = "Z" + std::to_string(w) + "-lon";
    return direct_product(GroupAction::trivial(h), cyclic(w), std::move(name));
}

GroupAction grid_dihedral_columns(std::size_t h, std::size_t w, std::string name) {
    if (name.empty()) name = "D" + std::to_string(w) + "-lon";
    Permutation reflect(w);
    for (std::size_t c = 0; c < w; ++c) reflect[c] = static_cast<std::uint32_t>(w - 1 - c);
    const std::string order = w <= 2 ? std::to_string(w) : "2·" + std::to_string(w);
    auto dihedral = GroupAction::from_generators("D" + std::to_string(w), w, {cyclic_shift(w), reflect}, order);
    return direct_product(GroupAction::trivial(h), dihedral, std::move(name));
}

GroupAction grid_translation(std::size_t h, std::size_t w, std::string name) {
    if (name.empty()) name = "Z" + std::to_string(h) + "xZ" + std::to_string(w);
    return direct_product(cyclic(h), cyclic(w), std::move(name));
}

GroupAction grid_klein(std::size_t h, std::size_t w, std::string name) {
    if (name.empty()) name = "klein-" + std::to_string(h) + "x" + std::to_string(w);
    auto flip = [](std::size_t k) {
        Permutation p(k);
        for (std::size_t i = 0; i < k; ++i) p[i] = static_cast<std::uint32_t>(k - 1 - i);
        return GroupAction::from_generators("flip", k, k > 1 ? std::vector<Permutation>{p} : std::vector<Permutation>{},
                                            k > 1 ? "2" : "1");
    };
    return direct_product(flip(h), flip(w), std::move(name));
}

GroupAction grid_rotation(std::size_t side, std::string name) {
    if (name.empty()) name = "Z4-rot-" + std::to_string(side);
    const std::size_t m = side * side;
    Permutation rot(m);
    for (std::size_t r = 0; r < side; ++r)
        for (std::size_t c = 0; c < side; ++c) rot[r * side + c] = static_cast<std::uint32_t>(c * side + (side - 1 - r));
    return GroupAction::from_generators(std::move(name), m, side > 1 ? std::vector<Permutation>{rot} : std::vector<Permutation>{},
                                        side > 1 ? "4" : "1");
}

GroupAction grid_dihedral_square(std::size_t side, std::string name) {
    if (name.empty()) name = "D4-" + std::to_string(side);
    if (side <= 1) return GroupAction::trivial(side * side, std::move(name));
    const std::size_t m = side * side;
    Permutation rot(m), ref(m);
    for (std::size_t r = 0; r < side; ++r)
        for (std::size_t c = 0; c < side; ++c) {
            rot[r * side + c] = static_cast<std::uint32_t>(c * side + (side - 1 - r));
            ref[r * side + c] = static_cast<std::uint32_t>(r * side + (side - 1 - c));
        }
    return GroupAction::from_generators(std::move(name), m, {rot, ref}, "8");
}

std::vector<std::vector<std::uint32_t>> contiguous_blocks(std::size_t block_size, std::size_t n_blocks) {
    std::vector<std::vector<std::uint32_t>> blocks(n_blocks);
    for (std::size_t b = 0; b < n_blocks; ++b) {
        blocks[b].resize(block_size);
        std::iota(blocks[b].begin(), blocks[b].end(), static_cast<std::uint32_t>(b * block_size));
    }
    return blocks;
}

GroupAction cartesian_power_on_blocks(const GroupAction& base,
                                      const std::vector<std::vector<std::uint32_t>>& blocks,
                                      std::string name) {
    require_permutation_base(base, "cartesian_power");
    validate_blocks(blocks, base.dim(), "cartesian_power");
    const std::size_t m = total_size(blocks);
    if (name.empty()) name = base.name() + "^" + std::to_string(blocks.size());
    std::vector<Permutation> gens;
    for (const auto& b : blocks) {
        auto lifted = lift_to_blocks(base.generators(), b, m);
        gens.insert(gens.end(), lifted.begin(), lifted.end());
    }
    return GroupAction::from_generators(std::move(name), m, std::move(gens),
                                        order_power(base.order_description(), blocks.size()));
}

GroupAction wreath_on_blocks(const GroupAction& base,
                             const std::vector<std::vector<std::uint32_t>>& blocks, WreathTop top,
                             std::string name) {
    require_permutation_base(base, "wreath");
    validate_blocks(blocks, base.dim(), "wreath");
    const std::size_t m = total_size(blocks);
    const std::size_t nb = blocks.size();
    if (name.empty()) {
        name = base.name() + "wr" + (top == WreathTop::Symmetric ? "S" : "Z") + std::to_string(nb);
    }
    std::vector<Permutation> gens;
    for (const auto& b : blocks) {
        auto lifted = lift_to_blocks(base.generators(), b, m);
        gens.insert(gens.end(), lifted.begin(), lifted.end());
    }
    auto identity = [m] {
        Permutation p(m);
        std::iota(p.begin(), p.end(), std::uint32_t{0});
        return p;
    };
    std::string top_order;
    if (top == WreathTop::Symmetric) {
        for (std::size_t b = 0; b + 1 < nb; ++b) {
            Permutation p = identity();
            for (std::size_t k = 0; k < base.dim(); ++k) {
                p[blocks[b][k]] = blocks[b + 1][k];
                p[blocks[b + 1][k]] = blocks[b][k];
            }
            gens.push_back(std::move(p));
        }
        top_order = factorial_text(nb);
    } else {
        if (nb > 1) {
            Permutation p = identity();
            for (std::size_t b = 0; b < nb; ++b)
                for (std::size_t k = 0; k < base.dim(); ++k) p[blocks[b][k]] = blocks[(b + 1) % nb][k];
            gens.push_back(std::move(p));
        }
        top_order = std::to_string(nb);
    }
    return GroupAction::from_generators(
        std::move(name), m, std::move(gens),
        order_product(order_power(base.order_description(), nb), top_order));
}

GroupAction tied_on_blocks(const GroupAction& base, const std::vector<std::vector<std::uint32_t>>& blocks,
                           std::string name) {
    require_permutation_base(base, "tied_on_blocks");
    validate_blocks(blocks, base.dim(), "tied_on_blocks");
    const std::size_t m = total_size(blocks);
    if (name.empty()) name = base.name() + "-tied" + std::to_string(blocks.size());
    std::vector<Permutation> gens;
    for (const auto& p : base.generators()) {
        Permutation g(m);
        for (const auto& b : blocks)
            for (std::size_t k = 0; k < b.size(); ++k) g[b[k]] = b[p[k]];
        gens.push_back(std::move(g));
    }
    return GroupAction::from_generators(std::move(name), m, std::move(gens), base.order_description());
}

GroupAction cartesian_power(const GroupAction& base, std::size_t n_blocks, std::string name) {
    return cartesian_power_on_blocks(base, contiguous_blocks(base.dim(), n_blocks), std::move(name));
}

GroupAction wreath(const GroupAction& base, std::size_t n_blocks, WreathTop top, std::string name) {
    return wreath_on_blocks(base, contiguous_blocks(base.dim(), n_blocks), top, std::move(name));
}

GroupAction block_symmetric(std::size_t m, const std::vector<std::vector<std::uint32_t>>& blocks,
                            std::string name) {
    validate_blocks(blocks, 0, "block_symmetric");
    if (total_size(blocks) != m) throw DimensionError("block_symmetric: blocks do not cover M indices");
    if (name.empty()) name = "block-sym";
    std::vector<Permutation> gens;
    bool equal_sizes = true;
    for (const auto& b : blocks) {
        equal_sizes = equal_sizes && b.size() == blocks.front().size();
        auto lifted = lift_to_blocks(adjacent_transpositions(b.size()), b, m);
        gens.insert(gens.end(), lifted.begin(), lifted.end());
    }
    std::string order;
    if (equal_sizes) {
        order = order_power(factorial_text(blocks.front().size()), blocks.size());
    } else {
        order = "1";
        for (const auto& b : blocks) order = order_product(order, factorial_text(b.size()));
    }
    return GroupAction::from_generators(std::move(name), m, std::move(gens), order);
}

// ---- decoys ----

std::vector<std::uint32_t> seeded_shuffle(std::size_t m, std::uint64_t seed) {
    std::vector<std::uint32_t> p(m);
    std::iota(p.begin(), p.end(), std::uint32_t{0});
    std::mt19937_64 rng(seed);
    std::shuffle(p.begin(), p.end(), rng);
    return p;
}

GroupAction decoy_random_partition_blocks(std::size_t m, std::size_t block_size, std::uint64_t seed,
                                          std::string name) {
    if (block_size == 0 || m % block_size != 0) {
        throw ConfigError("decoy_random_partition_blocks: block size " + std::to_string(block_size) +
                          " does not divide " + std::to_string(m));
    }
    const auto order = seeded_shuffle(m, seed);
    std::vector<std::vector<std::uint32_t>> blocks(m / block_size);
    for (std::size_t b = 0; b < blocks.size(); ++b) {
        blocks[b].assign(order.begin() + static_cast<std::ptrdiff_t>(b * block_size),
                         order.begin() + static_cast<std::ptrdiff_t>((b + 1) * block_size));
        std::sort(blocks[b].begin(), blocks[b].end());
    }
    if (name.empty()) {
        name = "random-block-S" + std::to_string(block_size) + "-" + std::to_string(blocks.size()) + "-seed" +
               std::to_string(seed);
    }
    return block_symmetric(m, blocks, std::move(name));
}

GroupAction decoy_random_subgroup_closure(std::size_t m, std::size_t n_generators, std::uint64_t order_cap,
                                          std::uint64_t seed, std::string name) {
    if (order_cap < 1) throw ConfigError("decoy_random_subgroup_closure: order cap must be at least 1");
    if (name.empty()) name = "random-S_M-subgroup-seed" + std::to_string(seed);
    if (n_generators == 0) return GroupAction::trivial(m, std::move(name));

    std::mt19937_64 rng(seed);
    std::vector<Permutation> gens;
    for (std::size_t k = 0; k < n_generators; ++k) {
        Permutation p(m);
        std::iota(p.begin(), p.end(), std::uint32_t{0});
        std::shuffle(p.begin(), p.end(), rng);
        gens.push_back(std::move(p));
    }

    // Breadth-first closure probe. Elements are stored as 16-bit images; only hashes
    // are kept for visited elements.
    const std::size_t width = m * sizeof(std::uint16_t);
    std::vector<std::uint16_t> frontier(m);
    std::iota(frontier.begin(), frontier.end(), std::uint16_t{0});
    std::unordered_set<std::uint64_t> visited;
    visited.insert(hash_bytes(reinterpret_cast<const std::uint8_t*>(frontier.data()), width));
    bool capped = false;
    std::vector<std::uint16_t> next, candidate(m);
    while (!frontier.empty() && !capped) {
        next.clear();
        for (std::size_t e = 0; e < frontier.size() / m && !capped; ++e) {
            const std::uint16_t* elem = frontier.data() + e * m;
            for (const auto& g : gens) {
                for (std::size_t i = 0; i < m; ++i) candidate[i] = static_cast<std::uint16_t>(g[elem[i]]);
                const auto h = hash_bytes(reinterpret_cast<const std::uint8_t*>(candidate.data()), width);
                if (visited.insert(h).second) {
                    if (visited.size() > order_cap) {
                        capped = true;
                        break;
                    }
                    next.insert(next.end(), candidate.begin(), candidate.end());
                }
            }
        }
        frontier.swap(next);
    }
    const std::string order = capped ? "≥" + std::to_string(order_cap) : std::to_string(visited.size());
    return GroupAction::from_generators(std::move(name), m, std::move(gens), order);
}

// ---- text format ----

std::string format_group(const GroupAction& g) {
    std::ostringstream out;
    out << g.name() << '\n' << g.dim() << '\n' << to_string(g.kind()) << '\n';
    if (!g.order_description().empty()) out << "order " << g.order_description() << '\n';
    for (const auto& p : g.generators()) {
        for (std::size_t i = 0; i < p.size(); ++i) out << (i ? "," : "") << p[i];
        out << '\n';
    }
    return out.str();
}

GroupAction parse_group(std::string_view text, const std::string& origin) {
    std::vector<std::string> lines;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const auto nl = text.find('\n', pos);
        const auto line = trim(text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos));
        if (!line.empty()) lines.push_back(line);
        if (nl == std::string_view::npos) break;
        pos = nl + 1;
    }
    if (lines.size() < 3) throw ConfigError(origin + ": group file needs name, dim and kind lines");
    const std::string name = lines[0];
    std::size_t dim = 0;
    try {
        dim = std::stoul(lines[1]);
    } catch (const std::exception&) {
        throw ConfigError(origin + ": bad dimension '" + lines[1] + "'");
    }
    const GroupKind kind = parse_group_kind(lines[2]);
    std::size_t next = 3;
    std::string order;
    if (next < lines.size() && lines[next].rfind("order", 0) == 0) {
        order = trim(std::string_view(lines[next]).substr(5));
        ++next;
    }
    std::vector<Permutation> gens;
    for (; next < lines.size(); ++next) {
        Permutation p;
        std::stringstream ss(lines[next]);
        std::string cell;
        while (std::getline(ss, cell, ',')) {
            try {
                p.push_back(static_cast<std::uint32_t>(std::stoul(trim(cell))));
            } catch (const std::exception&) {
                throw ConfigError(origin + ": bad generator entry '" + cell + "'");
            }
        }
        gens.push_back(std::move(p));
    }
    switch (kind) {
        case GroupKind::Trivial:
            if (!gens.empty()) throw ConfigError(origin + ": a Trivial group carries no generators");
            return GroupAction::trivial(dim, name);
        case GroupKind::FullSymmetric:
        case GroupKind::HaarOrthogonal:
            if (!gens.empty()) throw ConfigError(origin + ": closed-form groups carry no generators");
            return kind == GroupKind::FullSymmetric ? GroupAction::full_symmetric(dim, name)
                                                    : GroupAction::haar_orthogonal(dim, name);
        case GroupKind::GeneratorBased:
            try {
                return GroupAction::from_generators(name, dim, std::move(gens), order);
            } catch (const ConfigError& e) {
                throw ConfigError(origin + ": " + e.what());
            }
    }
    throw ConfigError(origin + ": unreachable group kind");
}

GroupAction read_group_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open group file '" + path + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_group(buf.str(), path);
}

void write_group_file(const GroupAction& g, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write group file '" + path + "'");
    out << format_group(g);
    if (!out) throw IoError("write failed for '" + path + "'");
}

GroupAction builtin_group(std::string_view spec, std::size_t dim) {
    const auto colon = spec.find(':');
    const std::string_view head = spec.substr(0, colon);
    const std::string_view arg = colon == std::string_view::npos ? std::string_view{} : spec.substr(colon + 1);

    if (head == "trivial") return GroupAction::trivial(dim);
    if (head == "sym") return GroupAction::full_symmetric(dim);
    if (head == "haar") return GroupAction::haar_orthogonal(dim);
    if (head == "cyclic") return cyclic(dim);
    if (head == "swap") {
        const auto c2 = arg.find(':');
        if (c2 == std::string_view::npos) throw ConfigError("group 'swap' expects swap:A:B");
        return swap_pair(dim, std::stoul(std::string(arg.substr(0, c2))), std::stoul(std::string(arg.substr(c2 + 1))));
    }
    if (head == "grid-rot" || head == "grid-d4") {
        const std::size_t side = std::stoul(std::string(arg));
        require_dim(side * side, dim, spec);
        return head == "grid-rot" ? grid_rotation(side) : grid_dihedral_square(side);
    }
    const auto [a, b] = parse_pair(arg, spec);
    require_dim(a * b, dim, spec);
    if (head == "grid-lat") return grid_cyclic_rows(a, b);
    if (head == "grid-lon") return grid_cyclic_columns(a, b);
    if (head == "grid-dihedral-lon") return grid_dihedral_columns(a, b);
    if (head == "grid-translation") return grid_translation(a, b);
    if (head == "grid-klein") return grid_klein(a, b);
    if (head == "cartesian") return cartesian_power(cyclic(a), b);
    if (head == "wreath") return wreath(cyclic(a), b, WreathTop::Symmetric);
    if (head == "wreath-cyclic") return wreath(cyclic(a), b, WreathTop::Cyclic);
    if (head == "tied") return tied_on_blocks(cyclic(a), contiguous_blocks(a, b));
    if (head == "block-sym") return block_symmetric(dim, contiguous_blocks(a, b), "block-S" + std::to_string(a) + "-" + std::to_string(b));
    throw ConfigError("unknown builtin group '" + std::string(spec) + "'");
}

}  // namespace symshrink
