#pragma once
// Shared helpers for unit and acceptance tests: copies library designs into the oracle's
// plain structs and runs the CLI binary.

#include <cstdlib>
#include <random>
#include <sys/wait.h>
#include <string>
#include <vector>

#include "crowdmrp/ordinal.hpp"
#include "crowdmrp/sharing.hpp"
#include "oracle.hpp"

namespace testsupport {

inline oracle::OrdinalData to_oracle(const crowdmrp::OrdinalDesign& d) {
    using crowdmrp::OrdinalFactor;
    oracle::OrdinalData o;
    for (std::size_t f = 0; f < crowdmrp::kOrdinalFactors; ++f)
        o.levels[f] = static_cast<int>(d.structure.levels[f].size());
    o.context_mean = d.structure.combination == crowdmrp::ContextCombination::mean;
    for (std::size_t i = 0; i < d.observations(); ++i) {
        oracle::OrdinalObs ob;
        ob.tweet = d.tweet[i];
        ob.contexts = d.structure.item_contexts[static_cast<std::size_t>(d.tweet[i])];
        ob.gender = d.gender[i];
        ob.age = d.age[i];
        ob.state = d.state[i];
        ob.party = d.party[i];
        for (int k : d.interactions(i)) ob.interactions.push_back(k);
        ob.rating = d.rating[i];
        o.obs.push_back(std::move(ob));
    }
    return o;
}

inline oracle::SharingData to_oracle(const crowdmrp::SharingDesign& d) {
    oracle::SharingData o;
    for (std::size_t f = 0; f < crowdmrp::kSharingFactors; ++f)
        o.levels[f] = static_cast<int>(d.structure.levels[f].size());
    for (std::size_t r = 0; r < d.rows(); ++r) {
        const std::size_t c = d.row_cell[r];
        oracle::ShareRow row;
        row.gender = d.cell_levels[c][0];
        row.age = d.cell_levels[c][1];
        row.party = d.cell_levels[c][2];
        row.state = d.cell_levels[c][3];
        row.x = d.cell_x[c];
        row.outcome = d.row_outcome[r];
        o.rows.push_back(row);
    }
    return o;
}

inline std::vector<double> random_point(std::size_t dim, std::mt19937_64& rng, double sd = 0.7) {
    std::normal_distribution<double> n(0.0, sd);
    std::vector<double> u(dim);
    for (auto& v : u) v = n(rng);
    return u;
}

// Runs a shell command and returns its exit status.
inline int run_command(const std::string& cmd) {
    const int rc = std::system(cmd.c_str());
    if (rc == -1) return -1;
    return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

}  // namespace testsupport
