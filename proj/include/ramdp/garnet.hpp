#pragma once

#include "ramdp/mdp.hpp"

#include <cstdint>

namespace ramdp {

/// Random Garnet instance G(S, A) with branching factor b.
struct GarnetSpec {
    int num_states = 20;
    int num_actions = 15;
    int branching = 5;
    std::uint64_t seed = 0;
};

/// Each (s,a) row puts stick-breaking mass on b distinct uniformly chosen
/// successors; rewards are i.i.d. U[0,1]. Deterministic in the seed.
TabularMdp generate_garnet(const GarnetSpec& spec);

}  // namespace ramdp
