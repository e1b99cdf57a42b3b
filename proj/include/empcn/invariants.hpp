#pragma once

#include <array>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "empcn/complex.hpp"
#include "empcn/geometry.hpp"

namespace empcn::inv {

inline constexpr double kHullTolerance = 1e-10;

/// k-volume of the simplex spanned by k+1 vertices. Uses |det|/k! when the
/// ambient dimension equals k and the Gram form sqrt(det(G^T G))/k! otherwise.
double simplex_volume(std::span<const geom::Point> vertices, int k);

/// Determinant form only; requires ambient dimension == k.
double simplex_volume_det(std::span<const geom::Point> vertices, int k);

/// Combinatorial description of a convex hull in R^2 or R^3. Everything
/// metric is recomputed from positions, so one decomposition serves both the
/// plain-double and the differentiable evaluation.
struct HullDecomposition {
    enum class Kind {
        Full,       // affine dimension == ambient
        Flat,       // affine dimension == ambient - 1
        Degenerate  // lower still; volume and area are zero
    };
    Kind kind = Kind::Degenerate;
    std::size_t ambient = 0;
    /// Full 3D: outward-oriented boundary triangles.
    std::vector<std::array<std::uint32_t, 3>> facets;
    /// Full 2D: CCW hull polygon. Flat 3D: convex polygon in its plane.
    /// Flat 2D: the two segment endpoints.
    std::vector<std::uint32_t> polygon;
    /// Distinct hull vertices (sorted); their centroid is the fan apex.
    std::vector<std::uint32_t> vertices;
};

/// Quickhull with visibility tolerance kHullTolerance on signed distances.
HullDecomposition hull_decompose(std::span<const geom::Point> points);

struct HullMeasure {
    double volume = 0.0;
    /// Boundary measure: surface area in 3D, perimeter in 2D. For a flat hull
    /// this is the measure of the hull inside its own hyperplane.
    double area = 0.0;
};

HullMeasure hull_measure(std::span<const geom::Point> points, const HullDecomposition& hull);
HullMeasure hull_volume_area(std::span<const geom::Point> points);

/// Half the largest pairwise distance.
double approx_radius(std::span<const geom::Point> points);

geom::Point midpoint(std::span<const geom::Point> points);

std::vector<geom::Point> cell_points(const CWComplex& c, CellId id, std::span<const geom::Point> positions);

/// Sum of boundary edge lengths of a 2-cell.
double ring_perimeter(const CWComplex& c, CellId ring, std::span<const geom::Point> positions);

enum class Invariant {
    NodeDistance,
    EdgeLength,
    SenderEdgeLength,
    ReceiverEdgeLength,
    MidpointDistance,
    RingRadius,
    RingPerimeter,
    HullVolume,
    HullArea,
    NodeToRingMidpoint,
    VertexCount,
    EdgeAngle,
};

std::string to_string(Invariant i);
Invariant invariant_from_string(const std::string& s);

/// Message channel: senders of one rank reach receivers of another rank via
/// one adjacency relation.
struct MessageKind {
    int sender_rank = 0;
    int receiver_rank = 0;
    Adjacency adjacency = Adjacency::Upper;
    friend auto operator<=>(const MessageKind&, const MessageKind&) = default;
};

std::string to_string(const MessageKind& k);  // e.g. "1->2:boundary"
MessageKind message_kind_from_string(const std::string& s);

/// Throws std::invalid_argument if `inv` is meaningless for the ranks.
void check_applicable(Invariant inv, const MessageKind& kind);

/// Default invariant lists per channel (N-body and ring-to-node lists).
std::vector<Invariant> default_invariants(const MessageKind& kind);

struct InvariantConfig {
    /// Channels without an entry use default_invariants().
    std::map<MessageKind, std::vector<Invariant>> schemas;

    std::vector<Invariant> schema(const MessageKind& kind) const;
    void validate() const;
};

nlohmann::json to_json(const InvariantConfig& c);
InvariantConfig invariant_config_from_json(const nlohmann::json& j);

struct InvariantVector {
    std::vector<Invariant> schema;
    std::vector<double> values;
};

InvariantVector compute_invariants(const MessageKind& kind, CellId receiver, CellId sender, const CWComplex& c,
                                   std::span<const geom::Point> positions, const std::vector<Invariant>& schema);

inline InvariantVector compute_invariants(const MessageKind& kind, CellId receiver, CellId sender, const CWComplex& c,
                                          std::span<const geom::Point> positions, const InvariantConfig& config) {
    return compute_invariants(kind, receiver, sender, c, positions, config.schema(kind));
}

}  // namespace empcn::inv
