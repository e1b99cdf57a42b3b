#include "empcn/invariants.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>
#include <stdexcept>

namespace empcn::inv {

using geom::Point;

namespace {

using Vec3 = std::array<double, 3>;

Vec3 to3(const Point& p) { return {p[0], p[1], p.dim() > 2 ? p[2] : 0.0}; }
Vec3 sub(const Vec3& a, const Vec3& b) { return {a[0] - b[0], a[1] - b[1], a[2] - b[2]}; }
double dot(const Vec3& a, const Vec3& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }
Vec3 cross(const Vec3& a, const Vec3& b) {
    return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
}
double norm(const Vec3& a) { return std::sqrt(dot(a, a)); }

double factorial(int k) {
    double f = 1.0;
    for (int i = 2; i <= k; ++i) f *= i;
    return f;
}

void check_simplex(std::span<const Point> v, int k) {
    if (k < 0) throw std::invalid_argument("simplex_volume: k must be >= 0");
    if (v.size() < static_cast<std::size_t>(k) + 1) {
        std::ostringstream oss;
        oss << "simplex_volume: a " << k << "-simplex needs " << k + 1 << " vertices, got " << v.size();
        throw std::invalid_argument(oss.str());
    }
    for (int i = 1; i <= k; ++i)
        if (v[static_cast<std::size_t>(i)].dim() != v[0].dim())
            throw std::invalid_argument("simplex_volume: vertices have different dimensions");
    if (v[0].dim() < static_cast<std::size_t>(k))
        throw std::invalid_argument("simplex_volume: ambient dimension smaller than k");
}

// Monotone chain over 2D coordinates. Returns indices (into xy) of the CCW
// hull, dropping points whose turn is within tolerance of collinear.
std::vector<std::uint32_t> hull_2d(const std::vector<std::array<double, 2>>& xy) {
    std::vector<std::uint32_t> idx(xy.size());
    for (std::uint32_t i = 0; i < idx.size(); ++i) idx[i] = i;
    std::sort(idx.begin(), idx.end(), [&](auto a, auto b) {
        return xy[a][0] < xy[b][0] || (xy[a][0] == xy[b][0] && (xy[a][1] < xy[b][1] || (xy[a][1] == xy[b][1] && a < b)));
    });
    auto turn = [&](std::uint32_t o, std::uint32_t a, std::uint32_t b) {
        return (xy[a][0] - xy[o][0]) * (xy[b][1] - xy[o][1]) - (xy[a][1] - xy[o][1]) * (xy[b][0] - xy[o][0]);
    };
    std::vector<std::uint32_t> h(2 * idx.size());
    std::size_t k = 0;
    for (auto i : idx) {
        while (k >= 2 && turn(h[k - 2], h[k - 1], i) <= kHullTolerance) --k;
        h[k++] = i;
    }
    for (std::size_t t = idx.size() - 1, lo = k + 1; t-- > 0;) {
        const auto i = idx[t];
        while (k >= lo && turn(h[k - 2], h[k - 1], i) <= kHullTolerance) --k;
        h[k++] = i;
    }
    h.resize(k > 0 ? k - 1 : 0);
    return h;
}

struct Facet {
    std::array<std::uint32_t, 3> v;
    Vec3 normal{};
    double offset = 0.0;
    std::vector<std::uint32_t> outside;
    bool alive = true;

    double signed_distance(const Vec3& p) const { return dot(normal, p) - offset; }
};

Facet make_facet(const std::vector<Vec3>& p, std::uint32_t a, std::uint32_t b, std::uint32_t c) {
    Facet f;
    f.v = {a, b, c};
    Vec3 n = cross(sub(p[b], p[a]), sub(p[c], p[a]));
    const double len = norm(n);
    if (len > 1e-300) n = {n[0] / len, n[1] / len, n[2] / len};
    else n = {0.0, 0.0, 0.0};
    f.normal = n;
    f.offset = dot(n, p[a]);
    return f;
}

HullDecomposition finish_vertices(HullDecomposition h) {
    std::set<std::uint32_t> vs(h.polygon.begin(), h.polygon.end());
    for (const auto& f : h.facets) vs.insert(f.begin(), f.end());
    h.vertices.assign(vs.begin(), vs.end());
    return h;
}

HullDecomposition hull_2d_ambient(std::span<const Point> points) {
    HullDecomposition h;
    h.ambient = 2;
    std::vector<std::array<double, 2>> xy;
    for (const auto& p : points) xy.push_back({p[0], p[1]});
    auto poly = hull_2d(xy);
    if (poly.size() >= 3) {
        h.kind = HullDecomposition::Kind::Full;
        h.polygon = std::move(poly);
        return finish_vertices(std::move(h));
    }
    // collinear: farthest pair becomes the segment
    double best = -1.0;
    std::uint32_t bi = 0, bj = 0;
    for (std::uint32_t i = 0; i < points.size(); ++i)
        for (std::uint32_t j = i + 1; j < points.size(); ++j) {
            const double d = geom::distance(points[i], points[j]);
            if (d > best) best = d, bi = i, bj = j;
        }
    if (best > kHullTolerance) {
        h.kind = HullDecomposition::Kind::Flat;
        h.polygon = {bi, bj};
    }
    return finish_vertices(std::move(h));
}

HullDecomposition hull_3d_ambient(std::span<const Point> points) {
    HullDecomposition h;
    h.ambient = 3;
    std::vector<Vec3> p;
    for (const auto& q : points) p.push_back(to3(q));
    const auto n = static_cast<std::uint32_t>(p.size());

    // Initial simplex: extreme pair on the widest axis, farthest from that
    // line, farthest from that plane.
    std::uint32_t i0 = 0, i1 = 0;
    double extent = -1.0;
    for (int axis = 0; axis < 3; ++axis) {
        std::uint32_t lo = 0, hi = 0;
        for (std::uint32_t i = 1; i < n; ++i) {
            if (p[i][axis] < p[lo][axis]) lo = i;
            if (p[i][axis] > p[hi][axis]) hi = i;
        }
        if (p[hi][axis] - p[lo][axis] > extent) extent = p[hi][axis] - p[lo][axis], i0 = lo, i1 = hi;
    }
    if (extent <= kHullTolerance) return finish_vertices(std::move(h));

    const Vec3 dir = sub(p[i1], p[i0]);
    std::uint32_t i2 = i0;
    double best = 0.0;
    for (std::uint32_t i = 0; i < n; ++i) {
        const double d = norm(cross(dir, sub(p[i], p[i0]))) / norm(dir);
        if (d > best) best = d, i2 = i;
    }
    if (best <= kHullTolerance) return finish_vertices(std::move(h));  // collinear: no area in 3D

    const Facet base = make_facet(p, i0, i1, i2);
    std::uint32_t i3 = i0;
    best = 0.0;
    for (std::uint32_t i = 0; i < n; ++i) {
        const double d = std::abs(base.signed_distance(p[i]));
        if (d > best) best = d, i3 = i;
    }
    if (best <= kHullTolerance) {
        // coplanar: 2D hull inside the plane
        const Vec3 u = [&] {
            const double l = norm(dir);
            return Vec3{dir[0] / l, dir[1] / l, dir[2] / l};
        }();
        const Vec3 w = cross(base.normal, u);
        std::vector<std::array<double, 2>> xy;
        for (const auto& q : p) {
            const Vec3 d = sub(q, p[i0]);
            xy.push_back({dot(d, u), dot(d, w)});
        }
        h.kind = HullDecomposition::Kind::Flat;
        h.polygon = hull_2d(xy);
        return finish_vertices(std::move(h));
    }

    std::vector<Facet> facets;
    {
        const std::array<std::uint32_t, 4> t{i0, i1, i2, i3};
        const std::array<std::array<int, 4>, 4> faces{{{0, 1, 2, 3}, {0, 3, 1, 2}, {0, 2, 3, 1}, {1, 3, 2, 0}}};
        for (const auto& f : faces) {
            Facet fa = make_facet(p, t[f[0]], t[f[1]], t[f[2]]);
            if (fa.signed_distance(p[t[f[3]]]) > 0.0) fa = make_facet(p, t[f[0]], t[f[2]], t[f[1]]);
            facets.push_back(std::move(fa));
        }
        for (std::uint32_t i = 0; i < n; ++i) {
            if (i == i0 || i == i1 || i == i2 || i == i3) continue;
            for (auto& f : facets)
                if (f.signed_distance(p[i]) > kHullTolerance) {
                    f.outside.push_back(i);
                    break;
                }
        }
    }

    for (;;) {
        auto it = std::find_if(facets.begin(), facets.end(), [](const Facet& f) { return f.alive && !f.outside.empty(); });
        if (it == facets.end()) break;
        std::uint32_t eye = it->outside.front();
        double far = -1.0;
        for (auto i : it->outside) {
            const double d = it->signed_distance(p[i]);
            if (d > far) far = d, eye = i;
        }

        std::vector<std::size_t> visible;
        for (std::size_t f = 0; f < facets.size(); ++f)
            if (facets[f].alive && facets[f].signed_distance(p[eye]) > kHullTolerance) visible.push_back(f);

        std::set<std::pair<std::uint32_t, std::uint32_t>> vis_edges;
        for (auto f : visible)
            for (int e = 0; e < 3; ++e) vis_edges.insert({facets[f].v[e], facets[f].v[(e + 1) % 3]});

        std::vector<std::uint32_t> orphans;
        std::vector<std::pair<std::uint32_t, std::uint32_t>> horizon;
        for (auto f : visible) {
            for (int e = 0; e < 3; ++e) {
                const auto a = facets[f].v[e], b = facets[f].v[(e + 1) % 3];
                if (!vis_edges.count({b, a})) horizon.push_back({a, b});
            }
            for (auto i : facets[f].outside)
                if (i != eye) orphans.push_back(i);
            facets[f].alive = false;
            facets[f].outside.clear();
        }

        const std::size_t first_new = facets.size();
        for (const auto& [a, b] : horizon) facets.push_back(make_facet(p, a, b, eye));
        std::sort(orphans.begin(), orphans.end());
        for (auto i : orphans)
            for (std::size_t f = first_new; f < facets.size(); ++f)
                if (facets[f].signed_distance(p[i]) > kHullTolerance) {
                    facets[f].outside.push_back(i);
                    break;
                }
    }

    h.kind = HullDecomposition::Kind::Full;
    for (const auto& f : facets)
        if (f.alive) h.facets.push_back(f.v);
    return finish_vertices(std::move(h));
}

}  // namespace

double simplex_volume_det(std::span<const Point> v, int k) {
    check_simplex(v, k);
    if (v[0].dim() != static_cast<std::size_t>(k))
        throw std::invalid_argument("simplex_volume_det: ambient dimension must equal k");
    if (k == 0) return 1.0;
    geom::SquareMatrix m{static_cast<std::size_t>(k), std::vector<double>(static_cast<std::size_t>(k * k))};
    for (int c = 0; c < k; ++c)
        for (int r = 0; r < k; ++r)
            m(static_cast<std::size_t>(r), static_cast<std::size_t>(c)) =
                v[static_cast<std::size_t>(c) + 1][static_cast<std::size_t>(r)] - v[0][static_cast<std::size_t>(r)];
    return std::abs(geom::determinant(m)) / factorial(k);
}

double simplex_volume(std::span<const Point> v, int k) {
    check_simplex(v, k);
    const std::size_t n = v[0].dim();
    if (n == static_cast<std::size_t>(k)) return simplex_volume_det(v, k);
    if (k == 0) return 1.0;
    const auto kk = static_cast<std::size_t>(k);
    geom::SquareMatrix gram{kk, std::vector<double>(kk * kk, 0.0)};
    for (std::size_t a = 0; a < kk; ++a)
        for (std::size_t b = 0; b < kk; ++b)
            for (std::size_t r = 0; r < n; ++r)
                gram(a, b) += (v[a + 1][r] - v[0][r]) * (v[b + 1][r] - v[0][r]);
    return std::sqrt(std::max(0.0, geom::determinant(gram))) / factorial(k);
}

HullDecomposition hull_decompose(std::span<const Point> points) {
    if (points.size() < 2) throw std::invalid_argument("convex hull needs at least 2 points");
    const std::size_t n = points[0].dim();
    for (const auto& p : points)
        if (p.dim() != n) throw std::invalid_argument("convex hull: points have different dimensions");
    if (n == 2) return hull_2d_ambient(points);
    if (n == 3) return hull_3d_ambient(points);
    throw std::invalid_argument("convex hull supports ambient dimension 2 or 3 only");
}

HullMeasure hull_measure(std::span<const Point> points, const HullDecomposition& h) {
    using Kind = HullDecomposition::Kind;
    HullMeasure m;
    if (h.kind == Kind::Degenerate) return m;
    std::vector<Point> hv;
    for (auto i : h.vertices) hv.push_back(points[i]);
    const Point c = midpoint(hv);
    if (h.ambient == 3 && h.kind == Kind::Full) {
        for (const auto& f : h.facets) {
            const Point tet[] = {c, points[f[0]], points[f[1]], points[f[2]]};
            const Point tri[] = {points[f[0]], points[f[1]], points[f[2]]};
            m.volume += simplex_volume(tet, 3);
            m.area += simplex_volume(tri, 2);
        }
        return m;
    }
    if (h.kind == Kind::Flat && h.polygon.size() == 2) {
        m.area = geom::distance(points[h.polygon[0]], points[h.polygon[1]]);
        return m;
    }
    // Polygon: fan from the centroid. In 2D it is the volume with the
    // perimeter as boundary measure; in 3D it is the flat hull's area.
    double fan = 0.0, perimeter = 0.0;
    const std::size_t k = h.polygon.size();
    for (std::size_t i = 0; i < k; ++i) {
        const Point& a = points[h.polygon[i]];
        const Point& b = points[h.polygon[(i + 1) % k]];
        const Point tri[] = {c, a, b};
        fan += simplex_volume(tri, 2);
        perimeter += geom::distance(a, b);
    }
    if (h.ambient == 2) {
        m.volume = fan;
        m.area = perimeter;
    } else {
        m.area = fan;
    }
    return m;
}

HullMeasure hull_volume_area(std::span<const Point> points) { return hull_measure(points, hull_decompose(points)); }

double approx_radius(std::span<const Point> points) {
    if (points.size() < 2) throw std::invalid_argument("approx_radius needs at least 2 points");
    double best = 0.0;
    for (std::size_t i = 0; i < points.size(); ++i)
        for (std::size_t j = i + 1; j < points.size(); ++j) best = std::max(best, geom::distance(points[i], points[j]));
    return 0.5 * best;
}

Point midpoint(std::span<const Point> points) {
    if (points.empty()) throw std::invalid_argument("midpoint of an empty point set");
    std::vector<double> acc(points[0].dim(), 0.0);
    for (const auto& p : points) {
        if (p.dim() != acc.size()) throw std::invalid_argument("midpoint: points have different dimensions");
        for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += p[i];
    }
    for (double& a : acc) a /= static_cast<double>(points.size());
    return Point(std::move(acc));
}

std::vector<Point> cell_points(const CWComplex& c, CellId id, std::span<const Point> positions) {
    std::vector<Point> out;
    for (auto v : c.cell(id).vertices) out.push_back(positions[v]);
    return out;
}

double ring_perimeter(const CWComplex& c, CellId ring, std::span<const Point> positions) {
    if (ring.rank != 2) throw std::invalid_argument("ring_perimeter expects a 2-cell, got " + to_string(ring));
    double total = 0.0;
    for (CellId e : c.boundaries(ring)) {
        const auto& vs = c.cell(e).vertices;
        total += geom::distance(positions[vs[0]], positions[vs[1]]);
    }
    return total;
}

std::string to_string(Invariant i) {
    switch (i) {
        case Invariant::NodeDistance: return "node-distance";
        case Invariant::EdgeLength: return "edge-length";
        case Invariant::SenderEdgeLength: return "sender-edge-length";
        case Invariant::ReceiverEdgeLength: return "receiver-edge-length";
        case Invariant::MidpointDistance: return "midpoint-distance";
        case Invariant::RingRadius: return "ring-radius";
        case Invariant::RingPerimeter: return "ring-perimeter";
        case Invariant::HullVolume: return "hull-volume";
        case Invariant::HullArea: return "hull-area";
        case Invariant::NodeToRingMidpoint: return "node-to-ring-midpoint";
        case Invariant::VertexCount: return "vertex-count";
        case Invariant::EdgeAngle: return "edge-angle";
    }
    return "?";
}

Invariant invariant_from_string(const std::string& s) {
    for (int i = 0; i <= static_cast<int>(Invariant::EdgeAngle); ++i)
        if (to_string(static_cast<Invariant>(i)) == s) return static_cast<Invariant>(i);
    throw std::invalid_argument("unknown invariant \"" + s + "\"");
}

std::string to_string(const MessageKind& k) {
    std::ostringstream oss;
    oss << k.sender_rank << "->" << k.receiver_rank << ":" << to_string(k.adjacency);
    return oss.str();
}

MessageKind message_kind_from_string(const std::string& s) {
    const auto arrow = s.find("->");
    const auto colon = s.find(':');
    if (arrow == std::string::npos || colon == std::string::npos || colon < arrow)
        throw std::invalid_argument("message kind must look like \"0->1:boundary\", got \"" + s + "\"");
    MessageKind k;
    try {
        k.sender_rank = std::stoi(s.substr(0, arrow));
        k.receiver_rank = std::stoi(s.substr(arrow + 2, colon - arrow - 2));
    } catch (const std::exception&) {
        throw std::invalid_argument("bad ranks in message kind \"" + s + "\"");
    }
    k.adjacency = adjacency_from_string(s.substr(colon + 1));
    check_adjacency_ranks(k.adjacency, k.sender_rank, k.receiver_rank);
    return k;
}

void check_applicable(Invariant inv, const MessageKind& kind) {
    const int s = kind.sender_rank, r = kind.receiver_rank;
    const int rings = (s == 2) + (r == 2);
    const int edges = (s == 1) + (r == 1);
    bool ok = true;
    switch (inv) {
        case Invariant::NodeDistance: ok = s == 0 && r == 0; break;
        case Invariant::EdgeLength: ok = edges == 1; break;
        case Invariant::SenderEdgeLength: ok = s == 1; break;
        case Invariant::ReceiverEdgeLength: ok = r == 1; break;
        case Invariant::MidpointDistance: ok = true; break;
        case Invariant::RingRadius:
        case Invariant::RingPerimeter:
        case Invariant::HullVolume:
        case Invariant::HullArea:
        case Invariant::VertexCount: ok = rings == 1; break;
        case Invariant::NodeToRingMidpoint: ok = rings == 1 && (s == 0 || r == 0); break;
        case Invariant::EdgeAngle: ok = edges == 2; break;
    }
    if (!ok)
        throw std::invalid_argument("invariant \"" + to_string(inv) + "\" does not apply to channel " + to_string(kind));
}

std::vector<Invariant> default_invariants(const MessageKind& kind) {
    const int lo = std::min(kind.sender_rank, kind.receiver_rank);
    const int hi = std::max(kind.sender_rank, kind.receiver_rank);
    if (lo == 0 && hi == 0) return {Invariant::NodeDistance};
    if (lo == 0 && hi == 1) return {Invariant::EdgeLength};
    if (lo == 1 && hi == 1)
        return {Invariant::SenderEdgeLength, Invariant::ReceiverEdgeLength, Invariant::MidpointDistance};
    if (lo == 1 && hi == 2) return {Invariant::RingRadius, Invariant::RingPerimeter, Invariant::EdgeLength};
    if (lo == 0 && hi == 2)
        return {Invariant::NodeToRingMidpoint, Invariant::RingPerimeter, Invariant::HullVolume, Invariant::HullArea};
    return {Invariant::MidpointDistance};
}

std::vector<Invariant> InvariantConfig::schema(const MessageKind& kind) const {
    auto it = schemas.find(kind);
    return it == schemas.end() ? default_invariants(kind) : it->second;
}

void InvariantConfig::validate() const {
    for (const auto& [kind, list] : schemas) {
        check_adjacency_ranks(kind.adjacency, kind.sender_rank, kind.receiver_rank);
        for (auto i : list) check_applicable(i, kind);
    }
}

nlohmann::json to_json(const InvariantConfig& c) {
    nlohmann::json j = nlohmann::json::object();
    for (const auto& [kind, list] : c.schemas) {
        auto& arr = j[to_string(kind)] = nlohmann::json::array();
        for (auto i : list) arr.push_back(to_string(i));
    }
    return j;
}

InvariantConfig invariant_config_from_json(const nlohmann::json& j) {
    InvariantConfig c;
    if (j.is_null()) return c;
    if (!j.is_object()) throw std::invalid_argument("invariant config must be an object");
    for (auto it = j.begin(); it != j.end(); ++it) {
        std::vector<Invariant> list;
        for (const auto& name : it.value()) list.push_back(invariant_from_string(name.get<std::string>()));
        c.schemas[message_kind_from_string(it.key())] = std::move(list);
    }
    c.validate();
    return c;
}

InvariantVector compute_invariants(const MessageKind& kind, CellId receiver, CellId sender, const CWComplex& c,
                                   std::span<const Point> positions, const std::vector<Invariant>& schema) {
    if (receiver.rank != kind.receiver_rank || sender.rank != kind.sender_rank)
        throw std::invalid_argument("compute_invariants: cells do not match channel " + to_string(kind));
    InvariantVector out;
    out.schema = schema;
    const auto sp = cell_points(c, sender, positions);
    const auto rp = cell_points(c, receiver, positions);
    auto edge_len = [&](CellId e) {
        const auto& vs = c.cell(e).vertices;
        return geom::distance(positions[vs[0]], positions[vs[1]]);
    };
    const CellId ring = sender.rank == 2 ? sender : receiver;
    const CellId edge = sender.rank == 1 ? sender : receiver;
    for (auto inv : schema) {
        check_applicable(inv, kind);
        double v = 0.0;
        switch (inv) {
            case Invariant::NodeDistance: v = geom::distance(sp[0], rp[0]); break;
            case Invariant::EdgeLength: v = edge_len(edge); break;
            case Invariant::SenderEdgeLength: v = edge_len(sender); break;
            case Invariant::ReceiverEdgeLength: v = edge_len(receiver); break;
            case Invariant::MidpointDistance:
            case Invariant::NodeToRingMidpoint: v = geom::distance(midpoint(sp), midpoint(rp)); break;
            case Invariant::RingRadius: v = approx_radius(cell_points(c, ring, positions)); break;
            case Invariant::RingPerimeter: v = ring_perimeter(c, ring, positions); break;
            case Invariant::HullVolume: v = hull_volume_area(cell_points(c, ring, positions)).volume; break;
            case Invariant::HullArea: v = hull_volume_area(cell_points(c, ring, positions)).area; break;
            case Invariant::VertexCount: v = static_cast<double>(c.cell(ring).vertices.size()); break;
            case Invariant::EdgeAngle: {
                const auto& a = c.cell(sender).vertices;
                const auto& b = c.cell(receiver).vertices;
                double d = 0.0, na = 0.0, nb = 0.0;
                for (std::size_t k = 0; k < positions[0].dim(); ++k) {
                    const double x = positions[a[1]][k] - positions[a[0]][k];
                    const double y = positions[b[1]][k] - positions[b[0]][k];
                    d += x * y, na += x * x, nb += y * y;
                }
                const double den = std::sqrt(na) * std::sqrt(nb);
                v = den > 0.0 ? std::abs(d) / den : 0.0;
                break;
            }
        }
        out.values.push_back(v);
    }
    return out;
}

}  // namespace empcn::inv
