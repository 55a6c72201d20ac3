#include "graphixs/dynamics.hpp"

#include <stdexcept>

namespace graphixs {

void brownian_perturb(std::vector<Vec3>& positions, double eps, double dt,
                      std::mt19937_64& rng) {
    if (eps < 0.0) throw std::invalid_argument("brownian_perturb: eps must be >= 0");
    if (!(dt > 0.0)) throw std::invalid_argument("brownian_perturb: dt must be > 0");
    if (eps == 0.0) return;

    std::normal_distribution<double> noise(0.0, eps * dt);
    for (auto& p : positions)
        for (int k = 0; k < 3; ++k)
            p[k] += noise(rng);
}

} // namespace graphixs
