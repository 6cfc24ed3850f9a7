#pragma once

#include "mmpt/space.hpp"

#include <cmath>
#include <random>
#include <vector>

namespace testsupport {

inline mmpt::MetricMeasureSpace line(std::size_t n, double spacing = 1.0, double mass = 1.0) {
    std::vector<std::vector<double>> coords;
    for (std::size_t i = 0; i < n; ++i) coords.push_back({spacing * static_cast<double>(i)});
    return mmpt::MetricMeasureSpace::from_coords(coords, std::vector<double>(n, mass));
}

inline mmpt::MetricMeasureSpace grid(std::size_t nx, std::size_t ny, double spacing = 1.0, double mass = 1.0) {
    std::vector<std::vector<double>> coords;
    for (std::size_t j = 0; j < ny; ++j)
        for (std::size_t i = 0; i < nx; ++i)
            coords.push_back({spacing * static_cast<double>(i), spacing * static_cast<double>(j)});
    return mmpt::MetricMeasureSpace::from_coords(coords, std::vector<double>(coords.size(), mass));
}

inline mmpt::MetricMeasureSpace random_cloud(std::size_t n, std::uint64_t seed, double side = 1.0) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, side);
    std::uniform_real_distribution<double> m(0.5, 2.0);
    std::vector<std::vector<double>> coords;
    std::vector<double> mass;
    for (std::size_t i = 0; i < n; ++i) {
        coords.push_back({u(rng), u(rng)});
        mass.push_back(m(rng));
    }
    return mmpt::MetricMeasureSpace::from_coords(coords, mass);
}

} // namespace testsupport
