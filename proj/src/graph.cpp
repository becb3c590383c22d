#include "epinet/graph.hpp"

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <Eigen/SparseCholesky>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <limits>
#include <numeric>
#include <set>
#include <sstream>
#include <stdexcept>

namespace epinet {

namespace {

Edge make_edge(int u, int v) { return u < v ? Edge{u, v} : Edge{v, u}; }

void normalize_edges(Graph& g) {
  std::sort(g.edges.begin(), g.edges.end());
  g.edges.erase(std::unique(g.edges.begin(), g.edges.end()), g.edges.end());
}

void require(bool cond, const std::string& msg) {
  if (!cond) throw std::invalid_argument(msg);
}

}  // namespace

Eigen::VectorXi Graph::degrees() const {
  Eigen::VectorXi deg = Eigen::VectorXi::Zero(n);
  for (const auto& [u, v] : edges) {
    ++deg[u];
    ++deg[v];
  }
  return deg;
}

int Graph::max_degree() const {
  if (n == 0) return 0;
  return degrees().maxCoeff();
}

// ---------------------------------------------------------------------------
// Generators
// ---------------------------------------------------------------------------

namespace {

Graph gen_erdos_renyi(int n, double p, Rng& rng) {
  require(p >= 0.0 && p <= 1.0, "erdos_renyi: p must be in [0,1]");
  Graph g;
  g.n = n;
  if (p == 0.0) return g;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if (rng.bernoulli(p)) g.edges.emplace_back(i, j);
  return g;
}

Graph gen_knn(int n, int k, Rng& rng) {
  require(k >= 1 && k < n, "knn: requires 1 <= k < n");
  std::vector<double> x(n), y(n);
  for (int i = 0; i < n; ++i) {
    x[i] = rng.uniform();
    y[i] = rng.uniform();
  }
  Graph g;
  g.n = n;
  std::vector<std::pair<double, int>> dist(n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const double dx = x[i] - x[j];
      const double dy = y[i] - y[j];
      dist[j] = {dx * dx + dy * dy, j};
    }
    dist[i].first = std::numeric_limits<double>::infinity();  // exclude self
    std::partial_sort(dist.begin(), dist.begin() + k, dist.end());
    for (int t = 0; t < k; ++t) g.edges.push_back(make_edge(i, dist[t].second));
  }
  normalize_edges(g);  // union symmetrization
  return g;
}

Graph gen_small_world(int n, int m, double p, Rng& rng) {
  require(m >= 2 && m % 2 == 0, "small_world: ring degree m must be even, >= 2");
  require(m < n, "small_world: m must be < n");
  require(p >= 0.0 && p <= 1.0, "small_world: p must be in [0,1]");
  std::set<Edge> kept;
  for (int j = 1; j <= m / 2; ++j)
    for (int i = 0; i < n; ++i) kept.insert(make_edge(i, (i + j) % n));
  // Watts-Strogatz rewiring: each lattice edge (i, i+j) may have its far
  // endpoint replaced by a uniform node, skipping self-loops and duplicates.
  for (int j = 1; j <= m / 2; ++j) {
    for (int i = 0; i < n; ++i) {
      if (!rng.bernoulli(p)) continue;
      const Edge old = make_edge(i, (i + j) % n);
      const int w = static_cast<int>(rng.uniform_int(n));
      const Edge candidate = make_edge(i, w);
      if (w == i || kept.count(candidate)) continue;
      if (kept.erase(old) == 0) continue;  // already rewired away
      kept.insert(candidate);
    }
  }
  Graph g;
  g.n = n;
  g.edges.assign(kept.begin(), kept.end());
  return g;
}

Graph gen_preferential_attachment(int n, int m, Rng& rng) {
  require(m >= 1 && m < n, "preferential_attachment: requires 1 <= m < n");
  Graph g;
  g.n = n;
  std::vector<int> targets(m);
  std::iota(targets.begin(), targets.end(), 0);
  std::vector<int> repeated;  // endpoint multiset, degree-proportional
  for (int i = m; i < n; ++i) {
    for (int t : targets) {
      g.edges.push_back(make_edge(i, t));
      repeated.push_back(i);
      repeated.push_back(t);
    }
    std::set<int> chosen;
    while (static_cast<int>(chosen.size()) < m)
      chosen.insert(repeated[rng.uniform_int(repeated.size())]);
    targets.assign(chosen.begin(), chosen.end());
  }
  normalize_edges(g);
  return g;
}

Graph gen_sbm(int n, const Sbm& model, Rng& rng) {
  const int blocks = static_cast<int>(model.sizes.size());
  require(blocks >= 1, "sbm: needs at least one block");
  require(std::accumulate(model.sizes.begin(), model.sizes.end(), 0) == n,
          "sbm: block sizes must sum to n");
  require(model.b.rows() == blocks && model.b.cols() == blocks,
          "sbm: B must be blocks x blocks");
  require((model.b.array() >= 0.0).all() && (model.b.array() <= 1.0).all(),
          "sbm: B entries must be probabilities");
  std::vector<int> block_of(n);
  int at = 0;
  for (int b = 0; b < blocks; ++b)
    for (int s = 0; s < model.sizes[b]; ++s) block_of[at++] = b;
  Graph g;
  g.n = n;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if (rng.bernoulli(model.b(block_of[i], block_of[j])))
        g.edges.emplace_back(i, j);
  return g;
}

Graph gen_grid2d(int n, int rows, int cols) {
  require(rows >= 1 && cols >= 1, "grid2d: rows and cols must be positive");
  require(rows * cols == n, "grid2d: rows * cols must equal n");
  Graph g;
  g.n = n;
  auto id = [cols](int r, int c) { return r * cols + c; };
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) {
      if (c + 1 < cols) g.edges.emplace_back(id(r, c), id(r, c + 1));
      if (r + 1 < rows) g.edges.emplace_back(id(r, c), id(r + 1, c));
    }
  normalize_edges(g);
  return g;
}

Graph gen_star(int n) {
  Graph g;
  g.n = n;
  for (int i = 1; i < n; ++i) g.edges.emplace_back(0, i);
  return g;
}

Graph gen_complete(int n) {
  Graph g;
  g.n = n;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) g.edges.emplace_back(i, j);
  return g;
}

}  // namespace

Graph generate_graph(const GraphModel& model, int n, std::uint64_t seed) {
  require(n >= 2, "generate_graph: n must be >= 2");
  Rng rng(seed);
  return std::visit(
      [&](const auto& m) -> Graph {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, ErdosRenyi>)
          return gen_erdos_renyi(n, m.p, rng);
        else if constexpr (std::is_same_v<T, Knn>)
          return gen_knn(n, m.k, rng);
        else if constexpr (std::is_same_v<T, SmallWorld>)
          return gen_small_world(n, m.m, m.p, rng);
        else if constexpr (std::is_same_v<T, PreferentialAttachment>)
          return gen_preferential_attachment(n, m.m, rng);
        else if constexpr (std::is_same_v<T, Sbm>)
          return gen_sbm(n, m, rng);
        else if constexpr (std::is_same_v<T, Grid2d>)
          return gen_grid2d(n, m.rows, m.cols);
        else if constexpr (std::is_same_v<T, Star>)
          return gen_star(n);
        else
          return gen_complete(n);
      },
      model);
}

// ---------------------------------------------------------------------------
// Structure matrices and spectral quantities
// ---------------------------------------------------------------------------

Eigen::SparseMatrix<double> incidence_matrix(const Graph& g) {
  Eigen::SparseMatrix<double> d(g.num_edges(), g.n);
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(2 * g.edges.size());
  for (int e = 0; e < g.num_edges(); ++e) {
    const auto& [u, v] = g.edges[e];  // u < v by construction
    trip.emplace_back(e, u, 1.0);
    trip.emplace_back(e, v, -1.0);
  }
  d.setFromTriplets(trip.begin(), trip.end());
  return d;
}

Eigen::SparseMatrix<double> laplacian(const Graph& g) {
  Eigen::SparseMatrix<double> l(g.n, g.n);
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(4 * g.edges.size());
  for (const auto& [u, v] : g.edges) {
    trip.emplace_back(u, u, 1.0);
    trip.emplace_back(v, v, 1.0);
    trip.emplace_back(u, v, -1.0);
    trip.emplace_back(v, u, -1.0);
  }
  l.setFromTriplets(trip.begin(), trip.end());
  return l;
}

std::vector<int> component_labels(const Graph& g) {
  std::vector<int> parent(g.n);
  std::iota(parent.begin(), parent.end(), 0);
  std::function<int(int)> find = [&](int a) {
    while (parent[a] != a) a = parent[a] = parent[parent[a]];
    return a;
  };
  for (const auto& [u, v] : g.edges) parent[find(u)] = find(v);
  std::vector<int> label(g.n, -1);
  int next = 0;
  for (int i = 0; i < g.n; ++i) {
    const int root = find(i);
    if (label[root] < 0) label[root] = next++;
    label[i] = label[root];
  }
  return label;
}

bool is_connected(const Graph& g) {
  if (g.n == 0) return false;
  const auto labels = component_labels(g);
  return *std::max_element(labels.begin(), labels.end()) == 0;
}

namespace {

// Deflated inverse subspace iteration for the two smallest nontrivial
// Laplacian eigenvalues. The constant vector is projected out explicitly;
// a tiny shift keeps the factorization positive definite.
double fiedler_iterative(const Graph& g) {
  const int n = g.n;
  const int q = 4;
  const Eigen::SparseMatrix<double> l = laplacian(g);
  const double scale = 2.0 * g.max_degree() + 1.0;
  const double sigma = 1e-10 * scale;
  Eigen::SparseMatrix<double> shifted = l;
  for (int i = 0; i < n; ++i) shifted.coeffRef(i, i) += sigma;
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> factor(shifted);
  if (factor.info() != Eigen::Success)
    throw std::runtime_error("fiedler_value: factorization failed");

  Rng rng(0x5eed5eedULL);
  Eigen::MatrixXd x(n, q);
  for (int j = 0; j < q; ++j)
    for (int i = 0; i < n; ++i) x(i, j) = rng.uniform() - 0.5;

  auto deflate = [&](Eigen::MatrixXd& m) {
    for (int j = 0; j < m.cols(); ++j) m.col(j).array() -= m.col(j).mean();
  };

  double theta = 0.0;
  const int max_iter = 2000;
  for (int it = 0; it < max_iter; ++it) {
    deflate(x);
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(x);
    Eigen::MatrixXd qmat =
        qr.householderQ() * Eigen::MatrixXd::Identity(n, q);
    const Eigen::MatrixXd lq = l * qmat;
    const Eigen::MatrixXd h = qmat.transpose() * lq;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(h);
    const Eigen::MatrixXd ritz = qmat * es.eigenvectors();
    theta = es.eigenvalues()(0);
    const Eigen::VectorXd v = ritz.col(0);
    const double resid = (l * v - theta * v).norm();
    if (resid <= 1e-10 * std::max(theta, 1e-300) || resid <= 1e-14 * scale)
      return theta;
    x = factor.solve(ritz);
    if (factor.info() != Eigen::Success)
      throw std::runtime_error("fiedler_value: inverse iteration solve failed");
  }
  std::ostringstream oss;
  oss << "fiedler_value: no convergence after " << max_iter
      << " iterations (last estimate " << theta << ")";
  throw std::runtime_error(oss.str());
}

}  // namespace

double fiedler_value(const Graph& g) {
  require(g.n >= 2, "fiedler_value: n must be >= 2");
  if (!is_connected(g)) return 0.0;
  if (g.n <= 500) {
    Eigen::MatrixXd l = Eigen::MatrixXd(laplacian(g));
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(l,
                                                      Eigen::EigenvaluesOnly);
    return es.eigenvalues()(1);
  }
  return fiedler_iterative(g);
}

double inverse_scaling_factor(const Graph& g, RhoMode mode,
                              int exact_size_cap) {
  require(is_connected(g), "inverse_scaling_factor: graph must be connected");
  if (mode == RhoMode::bound) return std::sqrt(2.0) / fiedler_value(g);
  require(g.n <= exact_size_cap,
          "inverse_scaling_factor: exact mode above size cap (raise the cap "
          "to override)");
  // pinv(D) = pinv(L) D^T, so column e = pinv(L)(e_u - e_v). The dense
  // pseudoinverse comes from the eigendecomposition with the zero mode
  // dropped.
  Eigen::MatrixXd l = Eigen::MatrixXd(laplacian(g));
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(l);
  const Eigen::VectorXd& ev = es.eigenvalues();
  const Eigen::MatrixXd& vec = es.eigenvectors();
  const double cutoff = 1e-12 * std::max(ev.cwiseAbs().maxCoeff(), 1.0);
  Eigen::VectorXd inv = Eigen::VectorXd::Zero(g.n);
  for (int i = 0; i < g.n; ++i)
    if (ev(i) > cutoff) inv(i) = 1.0 / ev(i);
  Eigen::MatrixXd pinv = vec * inv.asDiagonal() * vec.transpose();
  double rho = 0.0;
  for (const auto& [u, v] : g.edges)
    rho = std::max(rho, (pinv.col(u) - pinv.col(v)).norm());
  return rho;
}

double compatibility_factor_bound(const Graph& g, std::int64_t t_size) {
  require(t_size >= 1, "compatibility_factor_bound: |T| must be >= 1");
  const double dmax = static_cast<double>(g.max_degree());
  const double cap = std::min(std::sqrt(dmax),
                              std::sqrt(static_cast<double>(t_size)));
  return 1.0 / (2.0 * cap);
}

SpectralSummary spectral_summary(const Graph& g, RhoMode mode) {
  SpectralSummary s;
  s.connected = is_connected(g);
  s.d_max = g.max_degree();
  s.rho_mode = mode;
  s.lambda2 = s.connected ? fiedler_value(g) : 0.0;
  s.rho = s.connected ? inverse_scaling_factor(g, mode)
                      : std::numeric_limits<double>::quiet_NaN();
  return s;
}

Graph contact_weights(const Graph& g) {
  const Eigen::VectorXi deg = g.degrees();
  Graph out = g;
  out.weights.resize(g.edges.size());
  for (size_t e = 0; e < g.edges.size(); ++e) {
    const auto& [u, v] = g.edges[e];
    out.weights[e] = 1.0 / std::max(deg[u], deg[v]);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Edge-list I/O
// ---------------------------------------------------------------------------

Graph load_edge_list(const std::string& path, bool one_based) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_edge_list: cannot open " + path);
  std::string line;
  int line_no = 0;
  std::vector<std::pair<Edge, double>> weighted_edges;
  bool has_weights = false;
  bool first_row = true;
  int max_node = -1;
  auto fail = [&](const std::string& what) {
    throw std::runtime_error("load_edge_list: " + what + " at " + path +
                             ":" + std::to_string(line_no));
  };
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    for (char& c : line)
      if (c == ',') c = ' ';
    std::istringstream row(line);
    long long a = 0, b = 0;
    if (!(row >> a)) continue;  // blank line
    if (!(row >> b)) fail("expected two node ids");
    double w = 1.0;
    bool row_weighted = static_cast<bool>(row >> w);
    std::string extra;
    if (row >> extra) fail("trailing tokens");
    if (first_row) {
      has_weights = row_weighted;
      first_row = false;
    } else if (row_weighted != has_weights) {
      fail("mixed weighted and unweighted rows");
    }
    if (one_based) {
      --a;
      --b;
    }
    if (a < 0 || b < 0) fail("negative node id");
    if (a == b) fail("self-loop");
    if (row_weighted && !(w > 0.0)) fail("non-positive weight");
    max_node = std::max(max_node, static_cast<int>(std::max(a, b)));
    weighted_edges.push_back(
        {make_edge(static_cast<int>(a), static_cast<int>(b)), w});
  }
  std::sort(weighted_edges.begin(), weighted_edges.end(),
            [](const auto& x, const auto& y) { return x.first < y.first; });
  Graph g;
  g.n = max_node + 1;
  for (size_t i = 0; i < weighted_edges.size(); ++i) {
    if (i > 0 && weighted_edges[i].first == weighted_edges[i - 1].first) {
      if (weighted_edges[i].second != weighted_edges[i - 1].second)
        throw std::runtime_error(
            "load_edge_list: inconsistent duplicate weights in " + path);
      continue;
    }
    g.edges.push_back(weighted_edges[i].first);
    if (has_weights) g.weights.push_back(weighted_edges[i].second);
  }
  return g;
}

void save_edge_list(const Graph& g, const std::string& path, bool one_based) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("save_edge_list: cannot open " + path);
  const int off = one_based ? 1 : 0;
  char buf[64];
  for (size_t e = 0; e < g.edges.size(); ++e) {
    out << (g.edges[e].first + off) << ' ' << (g.edges[e].second + off);
    if (g.weighted()) {
      std::snprintf(buf, sizeof(buf), "%.17g", g.weights[e]);
      out << ' ' << buf;
    }
    out << '\n';
  }
  if (!out) throw std::runtime_error("save_edge_list: write failed: " + path);
}

}  // namespace epinet
