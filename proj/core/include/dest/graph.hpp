#pragma once

#include <string>
#include <utility>
#include <vector>

#include "dest/tensor.hpp"

namespace dest {

// Undirected skeleton topology. Joints are 0-based; the edge list carries each
// physical bone once.
struct SkeletonTopology {
    int V = 0;
    std::vector<std::pair<int, int>> edges;
};

// Parses the text format: first non-comment line is the joint count, each
// following line one "i j" edge. '#' starts a comment, blank lines ignored.
// Malformed content raises DataError naming the offending line.
SkeletonTopology load_topology(const std::string& path);
SkeletonTopology parse_topology(const std::string& text, const std::string& origin);
void save_topology(const SkeletonTopology& topo, const std::string& path);

// All-pairs shortest hop counts by BFS per joint. A disconnected skeleton is
// rejected: every scale matrix below would silently lose those joints.
std::vector<std::vector<int>> shortest_distances(const SkeletonTopology& topo);

// Scale-k adjacency: entry (i, j) is 1 when the joints are exactly k hops
// apart or i == j. Beyond the graph diameter only the diagonal remains.
Tensor k_adjacency(const std::vector<std::vector<int>>& dist, int k);

// Degree-compensated rescaling with smoothing term beta:
//   D_i = sum_j A_ij + beta
//   default:        A_hat = D^(-1/2) A D^(+1/2)   (rows shrink, columns grow)
//   symmetric form: A_hat = D^(-1/2) A D^(-1/2)
Tensor normalize_adjacency(const Tensor& A, double beta, bool symmetric);

// The stack of K normalized scale matrices used by spatial aggregation.
// Constant with respect to training (the trainable additive masks B live with
// the spatial parameters).
struct SkeletonGraph {
    int V = 0;
    int K = 0;
    double beta = 0.0;
    bool symmetric = false;
    std::vector<Tensor> a_hat;   // K matrices of shape [V x V]

    static SkeletonGraph build(const SkeletonTopology& topo, int K, double beta,
                               bool symmetric);
};

} // namespace dest
