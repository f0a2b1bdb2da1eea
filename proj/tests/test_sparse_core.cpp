#include "oracles.hpp"
#include "qo/random_systems.hpp"
#include "qo/sparse_sym.hpp"

#include <doctest.h>

#include <set>

using qo::GridGraph;
using qo::Stencil;

namespace {

long off_diagonal_in_row(const qo::SparseSymd& m, Eigen::Index row) {
  long n = 0;
  for (auto k = m.row_offsets()[row]; k < m.row_offsets()[row + 1]; ++k)
    if (m.col_indices()[k] != row) ++n;
  return n;
}

}  // namespace

TEST_CASE("grid graph rejects empty grids") {
  CHECK_THROWS_AS(GridGraph(0, 3, 1), qo::InvalidArgument);
  CHECK_THROWS_AS(GridGraph(3, 0, 1), qo::InvalidArgument);
  CHECK_THROWS_AS(GridGraph(2, 2, 0), qo::InvalidArgument);
  CHECK_THROWS_AS(qo::stencil_from_int(6), qo::InvalidArgument);
}

TEST_CASE("build_pattern on a 1x1 grid is diagonal only") {
  const auto m = qo::build_pattern(GridGraph(1, 1, 1), false);
  CHECK(m.dim() == 1);
  CHECK(m.nnz() == 1);
  CHECK(m.coeff(0, 0) == 0.0);
}

TEST_CASE("build_pattern on a 2x2 grid with stencil 4") {
  const auto m = qo::build_pattern(GridGraph(2, 2, 1, Stencil::Four), false);
  CHECK(m.dim() == 4);
  CHECK(m.nnz() == 4 + 8);
  // 0-1, 0-2, 1-3, 2-3; no diagonals
  CHECK(m.find(0, 1) >= 0);
  CHECK(m.find(0, 2) >= 0);
  CHECK(m.find(1, 3) >= 0);
  CHECK(m.find(2, 3) >= 0);
  CHECK(m.find(0, 3) < 0);
  CHECK(m.find(1, 2) < 0);
}

TEST_CASE("stencil neighbourhood of the centre pixel") {
  CHECK(off_diagonal_in_row(qo::build_pattern(GridGraph(3, 3, 1, Stencil::Four), false), 4) == 4);
  CHECK(off_diagonal_in_row(qo::build_pattern(GridGraph(3, 3, 1, Stencil::Eight), false), 4) == 8);
  CHECK(off_diagonal_in_row(qo::build_pattern(GridGraph(5, 5, 1, Stencil::Twelve), false), 12) == 12);
  // In a 3x3 grid the distance-2 axial neighbours of the centre fall outside.
  CHECK(off_diagonal_in_row(qo::build_pattern(GridGraph(3, 3, 1, Stencil::Twelve), false), 4) == 8);
}

TEST_CASE("stencil-12 adds exactly the distance-2 axial neighbours") {
  const GridGraph g(5, 5, 1, Stencil::Twelve);
  const auto nb = g.neighbours(g.pixel(2, 2));
  std::set<Eigen::Index> expected;
  for (int dr = -1; dr <= 1; ++dr)
    for (int dc = -1; dc <= 1; ++dc)
      if (dr != 0 || dc != 0) expected.insert(g.pixel(2 + dr, 2 + dc));
  for (auto [dr, dc] : {std::pair{0, 2}, {0, -2}, {2, 0}, {-2, 0}}) expected.insert(g.pixel(2 + dr, 2 + dc));
  CHECK(std::set<Eigen::Index>(nb.begin(), nb.end()) == expected);
}

TEST_CASE("stencil-4 edge count is H(W-1) + W(H-1)") {
  for (Eigen::Index h = 1; h <= 6; ++h) {
    for (Eigen::Index w = 1; w <= 6; ++w) {
      const GridGraph g(h, w, 1);
      const auto edges = g.edges();
      CHECK(static_cast<Eigen::Index>(edges.size()) == h * (w - 1) + w * (h - 1));
      const std::set<qo::PixelEdge> unique(edges.begin(), edges.end());
      CHECK(unique.size() == edges.size());
      for (const auto& [p, q] : edges) CHECK(p < q);
    }
  }
}

TEST_CASE("label-coupled pattern has L^2 entries per edge direction and L diagonal entries per pixel") {
  for (auto s : {Stencil::Four, Stencil::Eight, Stencil::Twelve}) {
    for (Eigen::Index L = 1; L <= 3; ++L) {
      const GridGraph g(4, 3, L, s);
      const auto m = qo::build_pattern(g, true);
      const auto e = static_cast<Eigen::Index>(g.edges().size());
      CHECK(m.dim() == g.pixels() * L);
      CHECK(m.nnz() == g.pixels() * L + 2 * e * L * L);
      CHECK(m.has_full_diagonal());
      for (const auto& [p, q] : g.edges())
        for (Eigen::Index a = 0; a < L; ++a)
          for (Eigen::Index b = 0; b < L; ++b) CHECK(m.find(g.index(p, a), g.index(q, b)) >= 0);
      // no intra-pixel cross-label coupling
      if (L > 1) CHECK(m.find(g.index(0, 0), g.index(0, 1)) < 0);
    }
  }
}

TEST_CASE("column indices strictly increase within each row") {
  const auto m = qo::build_pattern(GridGraph(5, 4, 2, Stencil::Twelve), true);
  for (Eigen::Index i = 0; i < m.dim(); ++i)
    for (auto k = m.row_offsets()[i] + 1; k < m.row_offsets()[i + 1]; ++k)
      CHECK(m.col_indices()[k - 1] < m.col_indices()[k]);
}

TEST_CASE("asymmetric input is rejected") {
  std::vector<qo::SparseSymd::Triplet> t{{0, 0, 1.0}, {0, 1, 2.0}, {1, 1, 1.0}};
  CHECK_THROWS_AS(qo::SparseSymd::from_triplets(2, t), qo::InvalidArgument);
  t.emplace_back(1, 0, 3.0);
  CHECK_THROWS_AS(qo::SparseSymd::from_triplets(2, t), qo::InvalidArgument);
}

TEST_CASE("spmv examples") {
  SUBCASE("identity") {
    const auto id = qo::add_scaled_identity(qo::build_pattern(GridGraph(1, 2, 1), false).zeros_like(), 1.0);
    // 1x2 grid has one edge; zero-valued, so this is I.
    Eigen::VectorXd v(2);
    v << 3, -2;
    CHECK(qo::spmv(id, v).isApprox(v));
  }
  SUBCASE("2x2 hand product") {
    const auto m = oracle::to_sparse((Eigen::Matrix2d() << 2, 1, 1, 2).finished());
    const Eigen::VectorXd v = Eigen::Vector2d(1, 1);
    const Eigen::VectorXd r = qo::spmv(m, v);
    CHECK(r[0] == 3.0);
    CHECK(r[1] == 3.0);
  }
  SUBCASE("zero vector") {
    qo::Rng rng(3);
    const auto m = qo::random_symmetric_values(qo::build_pattern(GridGraph(3, 3, 2, Stencil::Eight), true), -1, 1, rng, 4.0);
    CHECK(qo::spmv(m, Eigen::VectorXd::Zero(m.dim())).isZero(0.0));
  }
  SUBCASE("dimension mismatch") {
    const auto m = qo::build_pattern(GridGraph(2, 2, 1), false);
    CHECK_THROWS_AS(qo::spmv(m, Eigen::VectorXd::Zero(3)), qo::DimensionMismatch);
  }
}

TEST_CASE("add_scaled_identity") {
  const auto zero = qo::build_pattern(GridGraph(3, 2, 2), true);
  const auto ten = qo::add_scaled_identity(zero, 10.0);
  CHECK(oracle::dense(ten).isApprox(10.0 * Eigen::MatrixXd::Identity(12, 12)));
  CHECK(ten.same_pattern(zero));

  qo::Rng rng(1);
  const auto m = qo::random_symmetric_values(zero, -1, 1, rng, 0.5);
  CHECK(oracle::dense(qo::add_scaled_identity(m, 0.0)) == oracle::dense(m));

  const auto eye = qo::add_scaled_identity(zero, 1.0);
  CHECK(oracle::dense(qo::add_scaled_identity(eye, 2.0)).isApprox(3.0 * Eigen::MatrixXd::Identity(12, 12)));

  std::vector<qo::SparseSymd::Triplet> t{{0, 1, 1.0}, {1, 0, 1.0}};
  CHECK_THROWS_AS(qo::add_scaled_identity(qo::SparseSymd::from_triplets(2, t), 1.0), qo::InvalidArgument);
}

TEST_CASE("property: spmv of basis vectors is symmetric on random grid systems") {
  qo::Rng rng(42);
  for (int trial = 0; trial < 20; ++trial) {
    const auto s = std::array{Stencil::Four, Stencil::Eight, Stencil::Twelve}[trial % 3];
    const GridGraph g(1 + trial % 5, 2 + trial % 4, 1 + trial % 3, s);
    const auto m = qo::random_symmetric_values(qo::build_pattern(g, trial % 2 == 0), -1, 1, rng, 2.0);
    std::uniform_int_distribution<Eigen::Index> idx(0, m.dim() - 1);
    for (int k = 0; k < 10; ++k) {
      const auto i = idx(rng), j = idx(rng);
      const Eigen::VectorXd ei = Eigen::VectorXd::Unit(m.dim(), i);
      const Eigen::VectorXd ej = Eigen::VectorXd::Unit(m.dim(), j);
      CHECK(qo::spmv(m, ei).dot(ej) == qo::spmv(m, ej).dot(ei));
    }
  }
}

TEST_CASE("gershgorin bound") {
  const auto m = oracle::to_sparse((Eigen::Matrix2d() << 4, 1, 1, 3).finished());
  CHECK(qo::gershgorin_lower_bound(m) == doctest::Approx(2.0));
}
