#pragma once

#include <cstddef>
#include <limits>
#include <vector>

namespace aicfc {

struct MmrPick {
    std::size_t index = 0; // position in the candidate list
    double objective = 0.0;
};

/// Greedy Maximal Marginal Relevance over `n` candidates.
///
/// Each step picks the unselected candidate maximizing
///   lambda * query_sim(c) - (1 - lambda) * max_{s in selected} pair_sim(c, s)
/// where the max over an empty selection is 0. Ties go to the lower index, so
/// candidates should arrive in relevance order. Returns min(l, n) picks.
template <class QuerySim, class PairSim>
std::vector<MmrPick> mmr_greedy(std::size_t n, std::size_t l, double lambda, QuerySim&& query_sim,
                               PairSim&& pair_sim) {
    const std::size_t take = l < n ? l : n;
    std::vector<double> relevance(n);
    for (std::size_t i = 0; i < n; ++i) {
        relevance[i] = query_sim(i);
    }
    // Highest similarity to anything selected so far.
    std::vector<double> redundancy(n, -std::numeric_limits<double>::infinity());
    std::vector<bool> chosen(n, false);
    std::vector<MmrPick> picks;
    picks.reserve(take);

    while (picks.size() < take) {
        std::size_t best = n;
        double best_value = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            if (chosen[i]) {
                continue;
            }
            const double penalty = picks.empty() ? 0.0 : redundancy[i];
            const double value = lambda * relevance[i] - (1.0 - lambda) * penalty;
            if (best == n || value > best_value) {
                best = i;
                best_value = value;
            }
        }
        chosen[best] = true;
        picks.push_back(MmrPick{best, best_value});
        for (std::size_t i = 0; i < n; ++i) {
            if (!chosen[i]) {
                const double s = pair_sim(i, best);
                if (s > redundancy[i]) {
                    redundancy[i] = s;
                }
            }
        }
    }
    return picks;
}

} // namespace aicfc
