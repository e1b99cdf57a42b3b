#include "empcn/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>
#include <stdexcept>
#include <utility>

namespace empcn::geom {

namespace {

void check_finite(const std::vector<double>& c) {
    for (std::size_t i = 0; i < c.size(); ++i) {
        if (!std::isfinite(c[i])) {
            std::ostringstream oss;
            oss << "point coordinate " << i << " is not finite";
            throw std::invalid_argument(oss.str());
        }
    }
}

void check_dims(std::size_t a, std::size_t b, const char* what) {
    if (a != b) {
        std::ostringstream oss;
        oss << what << ": dimension mismatch (" << a << " vs " << b << ")";
        throw std::invalid_argument(oss.str());
    }
}

}  // namespace

Point::Point(std::vector<double> coords) : coords_(std::move(coords)) {
    if (coords_.empty()) throw std::invalid_argument("point must have dimension >= 1");
    check_finite(coords_);
}

Point::Point(std::initializer_list<double> coords) : Point(std::vector<double>(coords)) {}

SquareMatrix SquareMatrix::identity(std::size_t n) {
    SquareMatrix m{n, std::vector<double>(n * n, 0.0)};
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

double determinant(SquareMatrix m) {
    const std::size_t n = m.n;
    double det = 1.0;
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t pivot = col;
        for (std::size_t r = col + 1; r < n; ++r)
            if (std::abs(m(r, col)) > std::abs(m(pivot, col))) pivot = r;
        if (m(pivot, col) == 0.0) return 0.0;
        if (pivot != col) {
            for (std::size_t c = 0; c < n; ++c) std::swap(m(pivot, c), m(col, c));
            det = -det;
        }
        det *= m(col, col);
        for (std::size_t r = col + 1; r < n; ++r) {
            const double f = m(r, col) / m(col, col);
            for (std::size_t c = col; c < n; ++c) m(r, c) -= f * m(col, c);
        }
    }
    return det;
}

EuclideanTransform EuclideanTransform::identity(std::size_t dim) {
    return {SquareMatrix::identity(dim), std::vector<double>(dim, 0.0)};
}

Point apply_transform(const EuclideanTransform& t, const Point& p) {
    check_dims(t.dim(), p.dim(), "apply_transform");
    std::vector<double> out(t.translation);
    for (std::size_t r = 0; r < t.dim(); ++r)
        for (std::size_t c = 0; c < t.dim(); ++c) out[r] += t.rotation(r, c) * p[c];
    return Point(std::move(out));
}

Point apply_rotation(const EuclideanTransform& t, const Point& v) {
    check_dims(t.dim(), v.dim(), "apply_rotation");
    std::vector<double> out(t.dim(), 0.0);
    for (std::size_t r = 0; r < t.dim(); ++r)
        for (std::size_t c = 0; c < t.dim(); ++c) out[r] += t.rotation(r, c) * v[c];
    return Point(std::move(out));
}

EuclideanTransform compose(const EuclideanTransform& a, const EuclideanTransform& b) {
    check_dims(a.dim(), b.dim(), "compose");
    const std::size_t n = a.dim();
    EuclideanTransform out{SquareMatrix{n, std::vector<double>(n * n, 0.0)}, a.translation};
    for (std::size_t r = 0; r < n; ++r)
        for (std::size_t c = 0; c < n; ++c) {
            for (std::size_t k = 0; k < n; ++k) out.rotation(r, c) += a.rotation(r, k) * b.rotation(k, c);
            out.translation[r] += a.rotation(r, c) * b.translation[c];
        }
    return out;
}

EuclideanTransform random_transform(std::uint64_t seed, std::size_t dim, bool include_reflection,
                                    double translation_scale) {
    if (dim < 1) throw std::invalid_argument("random_transform: dim must be >= 1");
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);

    SquareMatrix q{dim, std::vector<double>(dim * dim)};
    for (double& v : q.a) v = normal(rng);

    // Gram-Schmidt over columns, left to right. Re-draw a column in the
    // (measure-zero) event it collapses.
    for (std::size_t c = 0; c < dim; ++c) {
        for (;;) {
            for (std::size_t pass = 0; pass < 2; ++pass) {
                for (std::size_t k = 0; k < c; ++k) {
                    double dot = 0.0;
                    for (std::size_t r = 0; r < dim; ++r) dot += q(r, k) * q(r, c);
                    for (std::size_t r = 0; r < dim; ++r) q(r, c) -= dot * q(r, k);
                }
            }
            double norm = 0.0;
            for (std::size_t r = 0; r < dim; ++r) norm += q(r, c) * q(r, c);
            norm = std::sqrt(norm);
            if (norm > 1e-8) {
                for (std::size_t r = 0; r < dim; ++r) q(r, c) /= norm;
                break;
            }
            for (std::size_t r = 0; r < dim; ++r) q(r, c) = normal(rng);
        }
    }
    if (!include_reflection && determinant(q) < 0.0)
        for (std::size_t r = 0; r < dim; ++r) q(r, 0) = -q(r, 0);

    std::uniform_real_distribution<double> uniform(-translation_scale, translation_scale);
    std::vector<double> t(dim, 0.0);
    if (translation_scale > 0.0)
        for (double& v : t) v = uniform(rng);
    return {std::move(q), std::move(t)};
}

double distance(const Point& p, const Point& q) {
    check_dims(p.dim(), q.dim(), "distance");
    double s = 0.0;
    for (std::size_t i = 0; i < p.dim(); ++i) {
        const double d = p[i] - q[i];
        s += d * d;
    }
    return std::sqrt(s);
}

double orthogonality_error(const SquareMatrix& r) {
    double worst = 0.0;
    for (std::size_t i = 0; i < r.n; ++i)
        for (std::size_t j = 0; j < r.n; ++j) {
            double dot = 0.0;
            for (std::size_t k = 0; k < r.n; ++k) dot += r(k, i) * r(k, j);
            worst = std::max(worst, std::abs(dot - (i == j ? 1.0 : 0.0)));
        }
    return worst;
}

}  // namespace empcn::geom
