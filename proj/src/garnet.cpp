#include "ramdp/garnet.hpp"

#include <algorithm>
#include <numeric>
#include <random>
#include <vector>

namespace ramdp {

TabularMdp generate_garnet(const GarnetSpec& spec) {
    const int S = spec.num_states;
    const int A = spec.num_actions;
    const int b = spec.branching;
    if (S < 1 || A < 1) throw UsageError("Garnet needs S >= 1 and A >= 1");
    if (b < 1 || b > S) throw UsageError("Garnet branching must lie in [1, S]");

    std::mt19937_64 rng(spec.seed);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    Kernel P = Kernel::Zero(Eigen::Index(S) * A, S);
    QTable r(S, A);
    std::vector<int> states(static_cast<std::size_t>(S));
    std::vector<double> cuts(std::size_t(b + 1));

    for (int s = 0; s < S; ++s) {
        for (int a = 0; a < A; ++a) {
            std::iota(states.begin(), states.end(), 0);
            for (int i = 0; i < b; ++i) {
                std::uniform_int_distribution<int> pick(i, S - 1);
                std::swap(states[std::size_t(i)], states[std::size_t(pick(rng))]);
            }
            // b-1 sorted cut points of [0,1]; redraw on a (measure-zero) tie so
            // that exactly b entries are positive.
            bool distinct = false;
            while (!distinct) {
                cuts.front() = 0.0;
                cuts.back() = 1.0;
                for (int i = 1; i < b; ++i) cuts[std::size_t(i)] = unif(rng);
                std::sort(cuts.begin(), cuts.end());
                distinct = std::adjacent_find(cuts.begin(), cuts.end()) == cuts.end();
            }
            const Eigen::Index row = Eigen::Index(s) * A + a;
            for (int i = 0; i < b; ++i)
                P(row, states[std::size_t(i)]) = cuts[std::size_t(i + 1)] - cuts[std::size_t(i)];
            r(s, a) = unif(rng);
        }
    }
    return TabularMdp(std::move(P), std::move(r));
}

}  // namespace ramdp
