#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "empcn/graph.hpp"

namespace empcn {

inline constexpr int kMaxRank = 2;

struct CellId {
    int rank = 0;
    std::uint32_t index = 0;
    friend auto operator<=>(const CellId&, const CellId&) = default;
};

std::string to_string(CellId id);

struct Cell {
    CellId id;
    /// Rank 0: the vertex itself. Rank 1: (u, v) with u < v. Rank 2: the
    /// canonical vertex cycle.
    std::vector<std::uint32_t> vertices;
    std::vector<CellId> boundary;
};

/// A neighbor together with the cell that witnesses the adjacency (shared
/// boundary for lower adjacency, shared co-boundary for upper adjacency).
struct Adjacent {
    CellId cell;
    CellId via;
    friend auto operator<=>(const Adjacent&, const Adjacent&) = default;
};

/// How a receiving cell collects its senders. `Point` links a cell with its
/// vertices in both directions: a rank-k receiver hears from its vertices, a
/// vertex hears from every rank-k cell containing it.
enum class Adjacency { Boundary, Coboundary, Lower, Upper, Point };

std::string to_string(Adjacency a);
Adjacency adjacency_from_string(const std::string& s);

/// Rotate so the smallest vertex comes first, then orient so the second entry
/// is the smaller of its two cycle neighbors.
VertexCycle canonical_cycle(std::span<const std::uint32_t> cycle);

/// Regular CW complex of rank <= 2 built from a graph and a list of vertex
/// cycles. Immutable once built; all adjacency relations are cached eagerly.
class CWComplex {
public:
    CWComplex() = default;

    std::size_t num_cells(int rank) const { return cells_[static_cast<std::size_t>(rank)].size(); }
    std::size_t num_vertices() const { return num_cells(0); }
    const Cell& cell(CellId id) const;
    std::span<const Cell> cells(int rank) const { return cells_[static_cast<std::size_t>(rank)]; }
    bool contains(CellId id) const;

    /// Index of the 1-cell joining a and b, or -1.
    std::int64_t edge_index(std::uint32_t a, std::uint32_t b) const;

    std::span<const CellId> boundaries(CellId id) const;
    std::span<const CellId> coboundaries(CellId id) const;
    std::span<const Adjacent> lower_adjacent(CellId id) const;
    std::span<const Adjacent> upper_adjacent(CellId id) const;
    std::span<const CellId> point_adjacency(CellId id) const;

    int max_rank() const;

private:
    friend CWComplex build_complex(std::size_t, std::span<const Edge>, std::span<const VertexCycle>);

    void check(CellId id) const;
    std::size_t flat(CellId id) const;

    std::array<std::vector<Cell>, kMaxRank + 1> cells_;
    std::array<std::size_t, kMaxRank + 2> offsets_{};
    std::vector<std::vector<CellId>> coboundary_;
    std::vector<std::vector<Adjacent>> lower_;
    std::vector<std::vector<Adjacent>> upper_;
    std::vector<std::vector<CellId>> point_;
    // per vertex: (neighbor, edge index), sorted by neighbor
    std::vector<std::vector<std::pair<std::uint32_t, std::uint32_t>>> incident_;
};

/// 0-cells are the nodes, 1-cells the edges (sorted, smaller endpoint first),
/// 2-cells the given cycles in canonical form, sorted and deduplicated by
/// edge set. Throws if a cycle uses an edge that is not in `edges`.
CWComplex build_complex(std::size_t num_nodes, std::span<const Edge> edges, std::span<const VertexCycle> two_cells);
CWComplex build_complex(const GeometricGraph& graph, std::span<const VertexCycle> two_cells);

/// One incoming message slot: sender plus the witness cell for lower/upper
/// adjacency (equal to the sender otherwise).
struct Incoming {
    CellId sender;
    CellId witness;
    bool has_witness = false;
};

/// Senders of rank `sender_rank` that reach `receiver` through `adjacency`,
/// in sorted order. Throws if the ranks are incompatible with the adjacency.
std::vector<Incoming> incoming(const CWComplex& c, Adjacency adjacency, CellId receiver, int sender_rank);

/// Checks that (sender rank, receiver rank) is meaningful for the adjacency.
void check_adjacency_ranks(Adjacency adjacency, int sender_rank, int receiver_rank);

}  // namespace empcn
