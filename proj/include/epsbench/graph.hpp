#pragma once

#include <algorithm>
#include <cstdint>
#include <utility>
#include <vector>

namespace epsbench {

// Directed graph as adjacency lists over nodes 0..n-1.
using Digraph = std::vector<std::vector<std::int32_t>>;

struct SccDecomposition {
    std::vector<std::int32_t> component;             // node -> component id
    std::vector<std::vector<std::int32_t>> members;  // component id -> sorted nodes
    std::vector<bool> is_closed;                     // no edge leaves the component

    std::size_t count() const { return members.size(); }
};

// Iterative Tarjan, so deep chains (renewal machines with 10^4+ states) do not
// exhaust the call stack.
inline SccDecomposition strongly_connected_components(const Digraph& graph) {
    const auto n = static_cast<std::int32_t>(graph.size());
    std::vector<std::int32_t> index(n, -1), low(n, 0);
    std::vector<bool> on_stack(n, false);
    std::vector<std::int32_t> stack;
    std::vector<std::pair<std::int32_t, std::size_t>> call;  // (node, next edge)
    SccDecomposition out;
    out.component.assign(n, -1);
    std::int32_t counter = 0;

    for (std::int32_t root = 0; root < n; ++root) {
        if (index[root] != -1) continue;
        call.emplace_back(root, 0);
        index[root] = low[root] = counter++;
        stack.push_back(root);
        on_stack[root] = true;
        while (!call.empty()) {
            auto& [v, edge] = call.back();
            if (edge < graph[v].size()) {
                const std::int32_t w = graph[v][edge++];
                if (index[w] == -1) {
                    index[w] = low[w] = counter++;
                    stack.push_back(w);
                    on_stack[w] = true;
                    call.emplace_back(w, 0);
                } else if (on_stack[w]) {
                    low[v] = std::min(low[v], index[w]);
                }
                continue;
            }
            const std::int32_t finished = v;
            call.pop_back();
            if (!call.empty()) {
                const std::int32_t parent = call.back().first;
                low[parent] = std::min(low[parent], low[finished]);
            }
            if (low[finished] == index[finished]) {
                const auto id = static_cast<std::int32_t>(out.members.size());
                std::vector<std::int32_t> members;
                std::int32_t w = -1;
                do {
                    w = stack.back();
                    stack.pop_back();
                    on_stack[w] = false;
                    out.component[w] = id;
                    members.push_back(w);
                } while (w != finished);
                std::sort(members.begin(), members.end());
                out.members.push_back(std::move(members));
            }
        }
    }

    out.is_closed.assign(out.members.size(), true);
    for (std::int32_t v = 0; v < n; ++v)
        for (std::int32_t w : graph[v])
            if (out.component[v] != out.component[w]) out.is_closed[out.component[v]] = false;
    return out;
}

// Largest closed (recurrent) component; ties go to the component holding the
// lowest node index. Returns -1 for an empty graph.
inline std::int32_t largest_closed_component(const SccDecomposition& scc) {
    std::int32_t best = -1;
    for (std::size_t c = 0; c < scc.count(); ++c) {
        if (!scc.is_closed[c]) continue;
        if (best < 0) {
            best = static_cast<std::int32_t>(c);
            continue;
        }
        const auto& cand = scc.members[c];
        const auto& cur = scc.members[best];
        if (cand.size() > cur.size() || (cand.size() == cur.size() && cand.front() < cur.front()))
            best = static_cast<std::int32_t>(c);
    }
    return best;
}

}  // namespace epsbench
