#include "inrshape/sampling.hpp"

#include "inrshape/errors.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace inrshape {

std::vector<Vec3> sample_surface(const TriMesh& mesh, std::size_t n, std::uint64_t seed) {
    if (n == 0) fail(ErrorCode::Parameter, "sample_surface needs n >= 1");
    std::vector<double> cumulative(mesh.faces.size());
    double total = 0.0;
    for (std::size_t f = 0; f < mesh.faces.size(); ++f) {
        total += triangle_area(mesh.corner(f, 0), mesh.corner(f, 1), mesh.corner(f, 2));
        cumulative[f] = total;
    }
    if (!(total > 0.0)) fail(ErrorCode::DegenerateMesh, "cannot sample a mesh with zero surface area");

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::vector<Vec3> points;
    points.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double target = unit(rng) * total;
        auto it = std::upper_bound(cumulative.begin(), cumulative.end(), target);
        if (it == cumulative.end()) --it;
        const auto f = std::size_t(it - cumulative.begin());
        const double r1 = std::sqrt(unit(rng));
        const double r2 = unit(rng);
        points.push_back((1.0 - r1) * mesh.corner(f, 0) + r1 * (1.0 - r2) * mesh.corner(f, 1) +
                         r1 * r2 * mesh.corner(f, 2));
    }
    return points;
}

}  // namespace inrshape
