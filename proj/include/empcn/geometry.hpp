#pragma once

#include <cstdint>
#include <initializer_list>
#include <span>
#include <vector>

namespace empcn::geom {

/// A point in R^n. Coordinates are required to be finite.
class Point {
public:
    Point() = default;
    explicit Point(std::vector<double> coords);
    Point(std::initializer_list<double> coords);

    std::size_t dim() const { return coords_.size(); }
    double operator[](std::size_t i) const { return coords_[i]; }
    double& operator[](std::size_t i) { return coords_[i]; }
    std::span<const double> coords() const { return coords_; }

    friend bool operator==(const Point&, const Point&) = default;

private:
    std::vector<double> coords_;
};

/// Dense square matrix, row-major. Only used for small n.
struct SquareMatrix {
    std::size_t n = 0;
    std::vector<double> a;

    static SquareMatrix identity(std::size_t n);
    double operator()(std::size_t r, std::size_t c) const { return a[r * n + c]; }
    double& operator()(std::size_t r, std::size_t c) { return a[r * n + c]; }
};

double determinant(SquareMatrix m);

/// x -> R x + t, with R orthogonal.
struct EuclideanTransform {
    SquareMatrix rotation;
    std::vector<double> translation;

    std::size_t dim() const { return rotation.n; }
    static EuclideanTransform identity(std::size_t dim);
};

Point apply_transform(const EuclideanTransform& t, const Point& p);

/// Rotation only; used for velocities and other displacement vectors.
Point apply_rotation(const EuclideanTransform& t, const Point& v);

/// compose(a, b) applied to p equals a(b(p)).
EuclideanTransform compose(const EuclideanTransform& a, const EuclideanTransform& b);

/// Gram-Schmidt on a seeded standard-normal matrix (column order fixed).
EuclideanTransform random_transform(std::uint64_t seed, std::size_t dim, bool include_reflection,
                                    double translation_scale);

double distance(const Point& p, const Point& q);

/// Largest |(R^T R - I)_ij|.
double orthogonality_error(const SquareMatrix& r);

}  // namespace empcn::geom
