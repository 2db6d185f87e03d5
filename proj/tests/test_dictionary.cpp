#include <doctest.h>

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <set>

#include "ebsdict/cubochoric.hpp"
#include "ebsdict/dictionary.hpp"
#include "ebsdict/errors.hpp"
#include "ebsdict/matching.hpp"
#include "support/oracles.hpp"

using namespace ebsdict;

namespace {

const Dictionary& small_dictionary() {
  static const Dictionary dict =
      build_dictionary(sample_fz_orientations(6, SymmetryGroup::cubic()), BandModel::default_fcc(), DetectorGeometry{});
  return dict;
}

double stddev_of_pairwise(const PatternSet& s) {
  double sum = 0, sq = 0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < s.size(); ++i)
    for (std::size_t j = i + 1; j < s.size(); ++j) {
      const double r = inner_product_f32(s.row(i), s.row(j)) / (s.row_norm(i) * s.row_norm(j));
      sum += r;
      sq += r * r;
      ++n;
    }
  const double m = sum / static_cast<double>(n);
  return std::sqrt(sq / static_cast<double>(n) - m * m);
}

}  // namespace

TEST_CASE("grid membership matches the minimal-angle oracle for small N") {
  const auto& g = SymmetryGroup::cubic();
  // Oracle: a grid point belongs to the FZ when no symmetry equivalent has a
  // smaller rotation angle. Exact ties are left to the boundary rule.
  for (int N = 1; N <= 6; ++N) {
    std::size_t strict = 0, ties = 0, accepted_ties = 0;
    const double step = kCubeEdge / (2.0 * N);
    for (int i = -N; i <= N; ++i)
      for (int j = -N; j <= N; ++j)
        for (int k = -N; k <= N; ++k) {
          const auto q = cubochoric_to_quaternion({i * step, j * step, k * step});
          double other = 0;
          const auto eq = symmetry_equivalents(q, g);
          for (std::size_t m = 1; m < 24; ++m) other = std::max(other, std::abs(eq[m].w));
          const bool in = in_fundamental_zone(quaternion_to_rodrigues(q), g);
          if (std::abs(q.w) > other + 1e-9) {
            ++strict;
            CHECK(in);
          } else if (std::abs(q.w) < other - 1e-9) {
            CHECK_FALSE(in);
          } else {
            ++ties;
            accepted_ties += in;
          }
        }
    const auto n = count_fz_orientations(N, g);
    CHECK(n == strict + accepted_ties);
    CHECK(accepted_ties <= ties);
    if (N == 1) CHECK(n == 1);  // every other point lies on the cube surface, a 180 degree rotation
  }
}

TEST_CASE("grid count approaches 1/24 of the cube") {
  const auto n = count_fz_orientations(40, SymmetryGroup::cubic());
  const double frac = static_cast<double>(n) / (81.0 * 81.0 * 81.0);
  CHECK(frac == doctest::Approx(1.0 / 24.0).epsilon(0.02));
  CHECK_THROWS_AS((void)count_fz_orientations(0, SymmetryGroup::cubic()), std::invalid_argument);
  CHECK_THROWS_AS((void)sample_fz_orientations(3, SymmetryGroup::trivial()), std::invalid_argument);
}

TEST_CASE("grid members are distinct fundamental-zone orientations") {
  const auto& g = SymmetryGroup::cubic();
  const auto grid = sample_fz_orientations(8, g, 2);
  CHECK(grid.size() == count_fz_orientations(8, g));
  CHECK(grid.orientations == sample_fz_orientations(8, g, 1).orientations);
  std::set<std::array<long long, 4>> keys;
  for (const auto& q : grid.orientations) {
    CHECK(in_fundamental_zone(quaternion_to_rodrigues(q), g));
    CHECK(q.w >= 0.0);
    keys.insert({std::llround(q.w * 1e9), std::llround(q.x * 1e9), std::llround(q.y * 1e9), std::llround(q.z * 1e9)});
  }
  CHECK(keys.size() == grid.size());
  const auto nn = nearest_neighbor_angles(grid);
  for (double a : nn) CHECK(a > 1e-6);
}

TEST_CASE("grid spacing is uniform") {
  const auto grid = sample_fz_orientations(15, SymmetryGroup::cubic());
  const auto s = grid_spacing(grid);
  CHECK(s.coefficient_of_variation() < 0.25);
  // The oracle recomputes the nearest neighbour with rotation matrices for a few members.
  std::vector<oracle::M3> mats;
  for (const auto& q : grid.orientations) mats.push_back(oracle::matrix_of(q));
  const auto nn = nearest_neighbor_angles(grid);
  for (std::size_t i = 0; i < grid.size(); i += 97) {
    double best = 180;
    for (std::size_t j = 0; j < grid.size(); ++j)
      if (j != i) best = std::min(best, oracle::misorientation_deg(mats[i], mats[j]));
    CHECK(nn[i] == doctest::Approx(best).epsilon(1e-6));
  }
}

TEST_CASE("dictionary rows are normalized simulations") {
  const auto& dict = small_dictionary();
  REQUIRE(dict.size() == dict.grid().size());
  for (std::size_t i = 0; i < dict.size(); ++i) CHECK(dict.patterns().row_norm(i) == doctest::Approx(1.0).epsilon(1e-6));
  const auto again = build_dictionary(dict.grid(), BandModel::default_fcc(), DetectorGeometry{}, 3);
  CHECK(std::ranges::equal(again.patterns().data(), dict.patterns().data()));
  for (std::size_t i = 0; i < dict.size(); i += 37) {
    const auto p = simulate_pattern(dict.orientation(i), BandModel::default_fcc(), DetectorGeometry{});
    double n = 0;
    for (double v : p.data) n += v * v;
    n = std::sqrt(n);
    const auto row = dict.patterns().row(i);
    for (std::size_t l = 0; l < row.size(); ++l) CHECK(row[l] == static_cast<float>(p.data[l] / n));
  }
}

TEST_CASE("dictionary rows are stable under grid permutation") {
  const auto& dict = small_dictionary();
  OrientationGrid perm = dict.grid();
  std::mt19937_64 rng(31);
  std::vector<std::size_t> order(perm.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::shuffle(order.begin(), order.end(), rng);
  for (std::size_t i = 0; i < order.size(); ++i) perm.orientations[i] = dict.grid().orientations[order[i]];
  const auto other = build_dictionary(perm, BandModel::default_fcc(), DetectorGeometry{});
  for (std::size_t i = 0; i < order.size(); ++i)
    CHECK(std::ranges::equal(other.patterns().row(i), dict.patterns().row(order[i])));
}

TEST_CASE("principal component of a rank one set") {
  const std::vector<float> v{1, 2, 3, 4, 5, 6, 7, 8};
  std::vector<float> data;
  for (int i = 0; i < 5; ++i) data.insert(data.end(), v.begin(), v.end());
  const auto pc = principal_component(PatternSet(2, 4, data));
  const double n = std::sqrt(204.0);
  for (int l = 0; l < 8; ++l) CHECK(pc[l] == doctest::Approx(v[l] / n).epsilon(1e-12));
  CHECK_THROWS_AS((void)principal_component(PatternSet(2, 4, std::vector<float>(16, 0.0f))), DegenerateError);
  CHECK_THROWS_AS((void)principal_component(PatternSet(2, 4, v)), std::invalid_argument);
}

TEST_CASE("principal component matches a dense eigensolver") {
  std::mt19937_64 rng(32);
  std::uniform_real_distribution<float> u(0.0f, 1.0f);
  std::vector<float> data(50 * 64);
  for (auto& x : data) x = u(rng);
  const PatternSet set(8, 8, data);
  const auto pc = principal_component(set);
  Eigen::MatrixXd a(50, 64);
  for (int i = 0; i < 50; ++i)
    for (int l = 0; l < 64; ++l) a(i, l) = data[i * 64 + l];
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a.transpose() * a);
  const Eigen::VectorXd top = es.eigenvectors().col(63);
  const double sign = top.sum() >= 0 ? 1.0 : -1.0;
  for (int l = 0; l < 64; ++l) CHECK(std::abs(pc[l] - sign * top(l)) < 1e-8);
}

TEST_CASE("principal component resembles the mean pattern") {
  const auto& dict = small_dictionary();
  const auto pc = principal_component(dict.patterns());
  const auto mean = dict.mean_direction();
  double dotp = 0, nm = 0;
  for (std::size_t l = 0; l < pc.size(); ++l) {
    dotp += pc[l] * mean[l];
    nm += mean[l] * mean[l];
  }
  CHECK(dotp / std::sqrt(nm) > 0.99);
}

TEST_CASE("compensation") {
  const auto& dict = small_dictionary();
  const auto comp = compensate(dict);
  REQUIRE(comp.size() == dict.size());
  for (std::size_t i = 0; i < comp.size(); ++i) {
    const auto r = comp.patterns.row(i);
    double p = 0;
    for (std::size_t l = 0; l < r.size(); ++l) p += r[l] * comp.principal[l];
    CHECK(std::abs(p) <= 1e-6);
    CHECK(comp.patterns.row_norm(i) == doctest::Approx(1.0).epsilon(1e-6));
  }
  // Projecting the same component out a second time leaves the rows in place.
  const auto twice = compensate(comp.patterns, comp.principal);
  double change = 0;
  for (std::size_t i = 0; i < comp.size(); ++i) {
    const auto a = comp.patterns.row(i), b = twice.patterns.row(i);
    for (std::size_t l = 0; l < a.size(); ++l) change = std::max(change, static_cast<double>(std::abs(a[l] - b[l])));
  }
  CHECK(change < 1e-6);
  CHECK(stddev_of_pairwise(comp.patterns) > stddev_of_pairwise(dict.patterns()));

  std::vector<float> rows{1, 0, 0, 0, 1, 1, 0, 0};
  CHECK_THROWS_AS((void)compensate(PatternSet(2, 2, rows), std::vector<double>{1, 0, 0, 0}), DegenerateError);
  CHECK_THROWS_AS((void)compensate_query(std::vector<float>{0, 0, 0, 0}, std::vector<double>{1, 0, 0, 0}),
                  DegenerateError);
  const auto q = compensate_query(std::vector<float>{2, 3, 0, 0}, std::vector<double>{1, 0, 0, 0});
  CHECK(q[0] == 0.0f);
  CHECK(q[1] == doctest::Approx(1.0));
}
