#pragma once

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include <cstdint>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "epinet/rng.hpp"

namespace epinet {

// Edges are stored normalized with first < second.
using Edge = std::pair<int, int>;

// Undirected simple graph. Optional per-edge weights hold the contact
// strengths omega_ij (> 0); combinatorial quantities (Laplacian, Fiedler
// value, incidence) always use the unweighted structure.
struct Graph {
  int n = 0;
  std::vector<Edge> edges;      // sorted, no self-loops, no duplicates
  std::vector<double> weights;  // empty, or one weight per edge

  bool weighted() const { return !weights.empty(); }
  int num_edges() const { return static_cast<int>(edges.size()); }
  Eigen::VectorXi degrees() const;
  int max_degree() const;
};

// Random-graph families used by the simulation experiments.
struct ErdosRenyi {
  double p = 0.0;
};
struct Knn {
  int k = 0;  // neighbours per node; union-symmetrized
};
struct SmallWorld {
  int m = 0;      // even ring degree
  double p = 0.0;  // rewiring probability
};
struct PreferentialAttachment {
  int m = 0;  // edges attached per arriving node
};
struct Sbm {
  std::vector<int> sizes;  // block sizes, must sum to n
  Eigen::MatrixXd b;       // symmetric block connection probabilities
};
struct Grid2d {
  int rows = 0;
  int cols = 0;  // rows * cols must equal n
};
struct Star {};
struct Complete {};

using GraphModel = std::variant<ErdosRenyi, Knn, SmallWorld,
                                PreferentialAttachment, Sbm, Grid2d, Star,
                                Complete>;

// Deterministic for fixed (model, n, seed).
Graph generate_graph(const GraphModel& model, int n, std::uint64_t seed);

// Signed edge-node incidence matrix D (m x n): +1 at min(i,j), -1 at
// max(i,j). Row order equals edge order. D^T D is the unnormalized
// Laplacian.
Eigen::SparseMatrix<double> incidence_matrix(const Graph& g);

// Unnormalized Laplacian diag(A 1) - A of the unweighted structure.
Eigen::SparseMatrix<double> laplacian(const Graph& g);

bool is_connected(const Graph& g);

// Connected-component label per node, labels in [0, #components).
std::vector<int> component_labels(const Graph& g);

// Second-smallest Laplacian eigenvalue. Returns 0 for disconnected graphs.
// Dense solve for n <= 500, deflated inverse subspace iteration above.
// Throws std::runtime_error with diagnostics if the iteration stalls.
double fiedler_value(const Graph& g);

enum class RhoMode { exact, bound };

// Maximum column norm of pinv(D). `exact` forms the dense Laplacian
// pseudoinverse and is capped at `exact_size_cap` nodes; `bound` returns
// sqrt(2) / lambda_2. Requires a connected graph.
double inverse_scaling_factor(const Graph& g, RhoMode mode,
                              int exact_size_cap = 2000);

// Lower bound 1 / (2 min{sqrt(d_max), sqrt(|T|)}) on the compatibility
// factor of an edge subset of size t_size.
double compatibility_factor_bound(const Graph& g, std::int64_t t_size);

struct SpectralSummary {
  double lambda2 = 0.0;
  double rho = 0.0;  // NaN when disconnected
  RhoMode rho_mode = RhoMode::bound;
  int d_max = 0;
  bool connected = false;
};

SpectralSummary spectral_summary(const Graph& g,
                                 RhoMode mode = RhoMode::bound);

// Degree-based contact strengths omega_ij = 1 / max(d_i, d_j).
Graph contact_weights(const Graph& g);

// Text edge lists: one "i j [w]" per line, comma or whitespace separated,
// '#' comments allowed. Duplicate rows collapse; conflicting duplicate
// weights or self-loops are errors (reported with line numbers).
Graph load_edge_list(const std::string& path, bool one_based = false);
void save_edge_list(const Graph& g, const std::string& path,
                    bool one_based = false);

}  // namespace epinet
