#include "dest/graph.hpp"

#include <cmath>
#include <deque>
#include <fstream>
#include <set>
#include <sstream>

namespace dest {

namespace {

std::string at_line(const std::string& origin, int line) {
    return origin + ":" + std::to_string(line);
}

} // namespace

SkeletonTopology parse_topology(const std::string& text, const std::string& origin) {
    SkeletonTopology topo;
    std::istringstream in(text);
    std::string raw;
    int line_no = 0;
    bool have_v = false;
    std::set<std::pair<int, int>> seen;
    while (std::getline(in, raw)) {
        ++line_no;
        const auto hash = raw.find('#');
        std::string line = hash == std::string::npos ? raw : raw.substr(0, hash);
        std::istringstream ls(line);
        if (!have_v) {
            long v;
            if (!(ls >> v)) {
                // blank or comment-only line before the header
                std::string tok;
                std::istringstream probe(line);
                if (probe >> tok) {
                    throw DataError(at_line(origin, line_no) + ": expected joint count, got '" + tok + "'");
                }
                continue;
            }
            std::string extra;
            if (ls >> extra) {
                throw DataError(at_line(origin, line_no) + ": trailing token '" + extra +
                                "' after joint count");
            }
            if (v < 1) {
                throw DataError(at_line(origin, line_no) + ": joint count must be >= 1, got " +
                                std::to_string(v));
            }
            topo.V = static_cast<int>(v);
            have_v = true;
            continue;
        }
        long i, j;
        if (!(ls >> i)) {
            std::string tok;
            std::istringstream probe(line);
            if (probe >> tok) {
                throw DataError(at_line(origin, line_no) + ": non-integer token '" + tok + "'");
            }
            continue; // blank / comment-only
        }
        if (!(ls >> j)) {
            throw DataError(at_line(origin, line_no) + ": edge needs two joint indices");
        }
        std::string extra;
        if (ls >> extra) {
            throw DataError(at_line(origin, line_no) + ": trailing token '" + extra + "' after edge");
        }
        if (i < 0 || i >= topo.V || j < 0 || j >= topo.V) {
            throw DataError(at_line(origin, line_no) + ": joint index out of range [0, " +
                            std::to_string(topo.V) + ")");
        }
        if (i == j) {
            throw DataError(at_line(origin, line_no) + ": self-loop on joint " + std::to_string(i));
        }
        std::pair<int, int> key{static_cast<int>(std::min(i, j)), static_cast<int>(std::max(i, j))};
        if (!seen.insert(key).second) {
            throw DataError(at_line(origin, line_no) + ": duplicate edge " + std::to_string(i) +
                            " " + std::to_string(j));
        }
        topo.edges.emplace_back(static_cast<int>(i), static_cast<int>(j));
    }
    if (!have_v) throw DataError(origin + ": missing joint count header");
    return topo;
}

SkeletonTopology load_topology(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open topology file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_topology(buf.str(), path);
}

void save_topology(const SkeletonTopology& topo, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write topology file: " + path);
    out << topo.V << "\n";
    for (const auto& [i, j] : topo.edges) out << i << " " << j << "\n";
    if (!out) throw IoError("failed while writing topology file: " + path);
}

std::vector<std::vector<int>> shortest_distances(const SkeletonTopology& topo) {
    const int V = topo.V;
    std::vector<std::vector<int>> adj(V);
    for (const auto& [i, j] : topo.edges) {
        adj[i].push_back(j);
        adj[j].push_back(i);
    }
    std::vector<std::vector<int>> dist(V, std::vector<int>(V, -1));
    for (int s = 0; s < V; ++s) {
        auto& d = dist[s];
        d[s] = 0;
        std::deque<int> q{s};
        while (!q.empty()) {
            const int u = q.front();
            q.pop_front();
            for (int w : adj[u]) {
                if (d[w] < 0) {
                    d[w] = d[u] + 1;
                    q.push_back(w);
                }
            }
        }
        for (int t = 0; t < V; ++t) {
            if (d[t] < 0) {
                throw ConfigError("skeleton is disconnected: no path between joints " +
                                  std::to_string(s) + " and " + std::to_string(t));
            }
        }
    }
    return dist;
}

Tensor k_adjacency(const std::vector<std::vector<int>>& dist, int k) {
    if (k < 1) throw ConfigError("k_adjacency: scale must be >= 1, got " + std::to_string(k));
    const int V = static_cast<int>(dist.size());
    Tensor A = Tensor::zeros({V, V});
    double* a = A.data();
    for (int i = 0; i < V; ++i) {
        for (int j = 0; j < V; ++j) {
            if (i == j || dist[i][j] == k) a[static_cast<int64_t>(i) * V + j] = 1.0;
        }
    }
    return A;
}

Tensor normalize_adjacency(const Tensor& A, double beta, bool symmetric) {
    if (A.rank() != 2 || A.dim(0) != A.dim(1)) {
        throw ShapeError("normalize_adjacency expects a square matrix, got " + shape_str(A.shape()));
    }
    const int V = A.dim(0);
    const double* a = A.data();
    std::vector<double> deg(V, 0.0);
    for (int i = 0; i < V; ++i) {
        double s = 0.0;
        for (int j = 0; j < V; ++j) s += a[static_cast<int64_t>(i) * V + j];
        deg[i] = s + beta;
        if (deg[i] <= 0.0) {
            throw DataError("normalize_adjacency: non-positive degree " + std::to_string(deg[i]) +
                            " at joint " + std::to_string(i));
        }
    }
    Tensor out = Tensor::zeros({V, V});
    double* o = out.data();
    for (int i = 0; i < V; ++i) {
        const double ri = 1.0 / std::sqrt(deg[i]);
        for (int j = 0; j < V; ++j) {
            const double cj = symmetric ? 1.0 / std::sqrt(deg[j]) : std::sqrt(deg[j]);
            o[static_cast<int64_t>(i) * V + j] = ri * a[static_cast<int64_t>(i) * V + j] * cj;
        }
    }
    return out;
}

SkeletonGraph SkeletonGraph::build(const SkeletonTopology& topo, int K, double beta,
                                   bool symmetric) {
    if (K < 1) throw ConfigError("SkeletonGraph: K must be >= 1, got " + std::to_string(K));
    SkeletonGraph g;
    g.V = topo.V;
    g.K = K;
    g.beta = beta;
    g.symmetric = symmetric;
    const auto dist = shortest_distances(topo);
    g.a_hat.reserve(K);
    for (int k = 1; k <= K; ++k) {
        g.a_hat.push_back(normalize_adjacency(k_adjacency(dist, k), beta, symmetric));
    }
    return g;
}

} // namespace dest
