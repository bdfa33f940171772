#pragma once

#include <cmath>
#include <vector>

namespace jobswitch::detail {

// Composite 8-point Gauss-Legendre rule on [0, 1] in v = sqrt(u / horizon): quadratic
// panel edges (i / n)^2 plus `geometric` halving panels inside the first one. Integrals
// of f(s) ds over [t, t + horizon] become sum w_q * 2 v_q f(t + v_q^2) after scaling by
// sqrt(horizon), which removes 1/sqrt(s - t) kernels and resolves N(d) near s = t.
struct SqrtRule {
    std::vector<double> x;
    std::vector<double> w;

    SqrtRule(int panels, int geometric) {
        static constexpr double gx[8] = {-0.9602898564975363, -0.7966664774136267, -0.5255324099163290,
                                         -0.1834346424956498, 0.1834346424956498,  0.5255324099163290,
                                         0.7966664774136267,  0.9602898564975363};
        static constexpr double gw[8] = {0.1012285362903763, 0.2223810344533745, 0.3137066458778873,
                                         0.3626837833783620, 0.3626837833783620, 0.3137066458778873,
                                         0.2223810344533745, 0.1012285362903763};
        const double first = 1.0 / (static_cast<double>(panels) * panels);
        std::vector<double> edges{0.0};
        for (int k = geometric; k >= 1; --k) edges.push_back(first * std::ldexp(1.0, -k));
        for (int i = 1; i <= panels; ++i) {
            const double f = static_cast<double>(i) / panels;
            edges.push_back(f * f);
        }
        for (std::size_t p = 0; p + 1 < edges.size(); ++p) {
            const double a = edges[p], h = edges[p + 1] - edges[p];
            for (int q = 0; q < 8; ++q) {
                x.push_back(a + 0.5 * h * (gx[q] + 1.0));
                w.push_back(0.5 * h * gw[q]);
            }
        }
    }
};

}  // namespace jobswitch::detail
