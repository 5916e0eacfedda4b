#pragma once

// Permutation group actions on {0..M-1}, their orbit-pair partitions and the
// Reynolds projection onto the commutant.

#include <cstddef>
#include <cstdint>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "symshrink/matrix.hpp"

namespace symshrink {

using Permutation = std::vector<std::uint32_t>;

enum class GroupKind { GeneratorBased, FullSymmetric, HaarOrthogonal, Trivial };

std::string_view to_string(GroupKind kind) noexcept;
GroupKind parse_group_kind(std::string_view text);

// Orbits of the conjugation action (i,j) -> (g(i), g(j)) on ordered pairs.
struct OrbitPartition {
    std::size_t dim = 0;
    std::vector<std::uint32_t> class_of;      // M*M, ordered-pair class ids
    std::size_t n_classes = 0;                // ordered count
    std::vector<std::uint32_t> sym_class_of;  // M*M, after merging (i,j) with (j,i)
    std::vector<std::uint32_t> sym_class_size;
    std::size_t d_g = 0;                      // unordered count

    std::uint32_t ordered_class(std::size_t i, std::size_t j) const noexcept {
        return class_of[i * dim + j];
    }
};

class GroupAction {
public:
    static GroupAction trivial(std::size_t dim, std::string name = "trivial");
    static GroupAction full_symmetric(std::size_t dim, std::string name = "S_M");
    static GroupAction haar_orthogonal(std::size_t dim, std::string name = "O(M)");
    // Validates each generator. An empty generator list yields a Trivial action.
    static GroupAction from_generators(std::string name, std::size_t dim,
                                       std::vector<Permutation> generators,
                                       std::string order_description = "");

    const std::string& name() const noexcept { return name_; }
    std::size_t dim() const noexcept { return dim_; }
    GroupKind kind() const noexcept { return kind_; }
    const std::vector<Permutation>& generators() const noexcept { return generators_; }
    const std::string& order_description() const noexcept { return order_description_; }

    // log10 of a lower bound on |G|: exact for symbolic orders that parse, otherwise
    // log10(#generators + 1). +infinity for the closed-form kinds.
    double order_log10_lower_bound() const;

    // Cached partition; throws ConfigError for FullSymmetric and HaarOrthogonal.
    const OrbitPartition& partition() const;

    GroupAction renamed(std::string name) const;

private:
    GroupAction() = default;

    std::string name_;
    std::size_t dim_ = 0;
    GroupKind kind_ = GroupKind::Trivial;
    std::vector<Permutation> generators_;
    std::string order_description_;
    std::shared_ptr<const OrbitPartition> partition_;
};

// Throws ConfigError unless p is a bijection of {0..dim-1}.
void validate_permutation(const Permutation& p, std::size_t dim);

// Union-find closure over generator edges; never enumerates the group.
OrbitPartition orbit_partition(const GroupAction& g);

SymmetricMatrix reynolds_project(const GroupAction& g, const SymmetricMatrix& a);

// log10 of the value of a symbolic order such as "5^11·11!", "20^5*5!", "(20!)^5",
// ">=1000000" or "inf". Returns NaN when the text does not parse.
double parse_order_log10(std::string_view text);

// ---- constructors -------------------------------------------------------

Permutation cyclic_shift(std::size_t k);
// The K-1 adjacent transpositions generating S_K.
std::vector<Permutation> adjacent_transpositions(std::size_t k);

GroupAction cyclic(std::size_t m, std::string name = "");
GroupAction symmetric_by_generators(std::size_t m, std::string name = "");
GroupAction swap_pair(std::size_t m, std::size_t a, std::size_t b, std::string name = "");

// g1 on the rows, g2 on the columns of a row-major dim(g1) x dim(g2) grid.
GroupAction direct_product(const GroupAction& g1, const GroupAction& g2, std::string name = "");

// Grid constructors on a row-major H x W layout (index r*W + c).
GroupAction grid_cyclic_rows(std::size_t h, std::size_t w, std::string name = "");     // latitude shift
GroupAction grid_cyclic_columns(std::size_t h, std::size_t w, std::string name = "");  // longitude shift
GroupAction grid_dihedral_columns(std::size_t h, std::size_t w, std::string name = "");
GroupAction grid_translation(std::size_t h, std::size_t w, std::string name = "");
GroupAction grid_klein(std::size_t h, std::size_t w, std::string name = "");  // row flip, column flip
GroupAction grid_rotation(std::size_t side, std::string name = "");           // Z4 on a square
GroupAction grid_dihedral_square(std::size_t side, std::string name = "");    // D4 on a square

enum class WreathTop { Symmetric, Cyclic };

// `base` acts on each block independently. Blocks are ordered index lists of equal
// length dim(base); their union must be {0..M-1}.
GroupAction cartesian_power_on_blocks(const GroupAction& base,
                                      const std::vector<std::vector<std::uint32_t>>& blocks,
                                      std::string name = "");
GroupAction wreath_on_blocks(const GroupAction& base,
                             const std::vector<std::vector<std::uint32_t>>& blocks, WreathTop top,
                             std::string name = "");
// The same base element applied to every block at once (order |base|).
GroupAction tied_on_blocks(const GroupAction& base,
                           const std::vector<std::vector<std::uint32_t>>& blocks,
                           std::string name = "");

// Contiguous blocks: block b holds indices b*K .. b*K + K-1.
std::vector<std::vector<std::uint32_t>> contiguous_blocks(std::size_t block_size, std::size_t n_blocks);

GroupAction cartesian_power(const GroupAction& base, std::size_t n_blocks, std::string name = "");
GroupAction wreath(const GroupAction& base, std::size_t n_blocks, WreathTop top = WreathTop::Symmetric,
                   std::string name = "");

// Within-block symmetric groups (adjacent transpositions inside each block).
GroupAction block_symmetric(std::size_t m, const std::vector<std::vector<std::uint32_t>>& blocks,
                            std::string name = "");

// ---- decoys ---------------------------------------------------------------

// Block-symmetric action over a seeded uniformly random partition into blocks of
// `block_size`.
GroupAction decoy_random_partition_blocks(std::size_t m, std::size_t block_size, std::uint64_t seed,
                                          std::string name = "");

// Random generators drawn from S_m. A breadth-first closure probe bounds the order;
// when it passes `order_cap` the description is recorded as ">=cap".
GroupAction decoy_random_subgroup_closure(std::size_t m, std::size_t n_generators,
                                          std::uint64_t order_cap, std::uint64_t seed,
                                          std::string name = "");

// Seeded uniform shuffle of {0..m-1} shared by all decoy constructors.
std::vector<std::uint32_t> seeded_shuffle(std::size_t m, std::uint64_t seed);

// ---- text format ----------------------------------------------------------

// name / dim / kind, then one comma-separated generator per line. An optional
// "order <description>" line may follow the kind line.
GroupAction read_group_file(const std::string& path);
void write_group_file(const GroupAction& g, const std::string& path);
std::string format_group(const GroupAction& g);
GroupAction parse_group(std::string_view text, const std::string& origin = "<string>");

// Builtin constructors by name for a given dimension, e.g. "trivial", "sym", "haar",
// "cyclic", "swap:0:1", "grid-lat:8x8", "grid-lon:8x8", "grid-dihedral-lon:8x8",
// "grid-translation:8x8", "grid-klein:8x8", "grid-rot:8", "grid-d4:8",
// "cartesian:8x8", "wreath:8x8", "wreath-cyclic:8x8", "tied:20x5",
// "block-sym:20x5".
GroupAction builtin_group(std::string_view spec, std::size_t dim);

}  // namespace symshrink
