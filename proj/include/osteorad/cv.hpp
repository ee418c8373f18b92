#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "osteorad/error.hpp"
#include "osteorad/rng.hpp"

namespace osteorad {

/// Fold index per row such that all rows of one group share a fold. Distinct
/// groups are sorted, shuffled with a seeded stream and dealt round-robin.
/// With `strata` (one value per row, constant within a group) each stratum is
/// shuffled separately and dealt in turn, which balances classes across folds.
inline std::vector<int> grouped_folds(const std::vector<std::string>& groups, int folds, std::uint64_t seed,
                                      const std::vector<int>* strata = nullptr) {
    if (folds < 2) throw ConfigError("need at least 2 folds");
    if (strata && strata->size() != groups.size()) throw DataError("strata do not align with groups");
    std::map<std::string, int> stratum_of;
    for (std::size_t r = 0; r < groups.size(); ++r) {
        const int s = strata ? (*strata)[r] : 0;
        const auto [it, fresh] = stratum_of.emplace(groups[r], s);
        if (!fresh && it->second != s) throw DataError("group '" + groups[r] + "' spans several strata");
    }
    if (stratum_of.size() < static_cast<std::size_t>(folds)) {
        throw DataError("only " + std::to_string(stratum_of.size()) + " groups for " + std::to_string(folds) +
                        " folds");
    }
    std::map<int, std::vector<std::string>> by_stratum;
    for (const auto& [g, s] : stratum_of) by_stratum[s].push_back(g);
    std::map<std::string, int> fold_of;
    std::size_t dealt = 0;
    for (auto& [s, members] : by_stratum) {
        CounterRng rng(derive_key(seed, {0xF01D, static_cast<std::uint64_t>(static_cast<std::int64_t>(s))}));
        portable_shuffle(members, rng);
        for (const auto& g : members) fold_of[g] = static_cast<int>(dealt++ % static_cast<std::size_t>(folds));
    }
    std::vector<int> out(groups.size());
    for (std::size_t r = 0; r < groups.size(); ++r) out[r] = fold_of.at(groups[r]);
    return out;
}

/// Row indices whose fold equals (or differs from) `k`.
inline std::vector<std::size_t> fold_rows(const std::vector<int>& fold, int k, bool in_fold) {
    std::vector<std::size_t> out;
    for (std::size_t r = 0; r < fold.size(); ++r) {
        if ((fold[r] == k) == in_fold) out.push_back(r);
    }
    return out;
}

}  // namespace osteorad
