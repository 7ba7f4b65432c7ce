#include <doctest.h>

#include <cmath>
#include <random>

#include "mgi/reduction.hpp"
#include "mgi/sampling.hpp"

using namespace mgi;

namespace {

Eigen::MatrixXd random_matrix(int rows, int cols, unsigned seed) {
  std::mt19937 rng(seed);
  std::normal_distribution<double> dist;
  Eigen::MatrixXd m(rows, cols);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) m(r, c) = dist(rng);
  return m;
}

Eigen::MatrixXd random_spd(int n, unsigned seed) {
  const Eigen::MatrixXd m = random_matrix(n, n + 4, seed);
  return m * m.transpose() + 0.1 * Eigen::MatrixXd::Identity(n, n);
}

void check_penrose(const Eigen::MatrixXd& a, const Eigen::MatrixXd& apinv) {
  const double scale = std::max(1.0, a.cwiseAbs().maxCoeff());
  CHECK((a * apinv * a - a).cwiseAbs().maxCoeff() < 1e-10 * scale);
  CHECK((apinv * a * apinv - apinv).cwiseAbs().maxCoeff() < 1e-10);
  CHECK((a * apinv - (a * apinv).transpose()).cwiseAbs().maxCoeff() < 1e-10);
  CHECK((apinv * a - (apinv * a).transpose()).cwiseAbs().maxCoeff() < 1e-10);
}

}  // namespace

TEST_CASE("pseudoinverse of the identity is the identity") {
  const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(5, 5);
  CHECK((pseudoinverse(eye) - eye).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("pseudoinverse inverts the nonzero part of a singular diagonal") {
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(2, 2);
  d(0, 0) = 2.0;
  const Eigen::MatrixXd p = pseudoinverse(d);
  CHECK(p(0, 0) == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(std::abs(p(0, 1)) + std::abs(p(1, 0)) + std::abs(p(1, 1)) < 1e-14);
}

TEST_CASE("pseudoinverse satisfies the four Penrose conditions") {
  const Eigen::MatrixXd a = random_matrix(20, 12, 21);
  check_penrose(a, pseudoinverse(a));
  // Rank-deficient case: duplicate columns.
  Eigen::MatrixXd b = a;
  b.col(3) = b.col(7);
  check_penrose(b, pseudoinverse(b));
  CHECK_THROWS_AS(
      pseudoinverse(Eigen::MatrixXd::Constant(
          2, 2, std::numeric_limits<double>::quiet_NaN())),
      std::invalid_argument);
}

TEST_CASE("symmetric pseudoinverse agrees with the SVD route") {
  const Eigen::MatrixXd s = random_spd(9, 33);
  CHECK((pseudoinverse_symmetric(s) - pseudoinverse(s)).cwiseAbs().maxCoeff() <
        1e-9);
  // Singular symmetric: projector onto a random subspace.
  const Eigen::MatrixXd v = random_matrix(6, 2, 34);
  const Eigen::MatrixXd proj = v * pseudoinverse(v);
  check_penrose(proj, pseudoinverse_symmetric(proj));
}

TEST_CASE("symmetric pseudoinverse stays accurate at pipeline sizes") {
  // Covers the large-n eigendecomposition path that small fixtures miss.
  const int n = 600;
  const Eigen::MatrixXd s = random_spd(n, 35);
  const Eigen::MatrixXd p = pseudoinverse_symmetric(s);
  CHECK((s * p - Eigen::MatrixXd::Identity(n, n)).cwiseAbs().maxCoeff() <
        1e-7);
}

TEST_CASE("reduce_linear is the identity on identity instruments") {
  const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(7, 7);
  const Eigen::VectorXd xi = random_matrix(7, 1, 40);
  CHECK((reduce_linear(xi, eye, eye, eye) - xi).cwiseAbs().maxCoeff() <
        1e-12);
  // Empty U means identity too.
  CHECK((reduce_linear(xi, eye, eye) - xi).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("reduce_linear is unbiased on exact data") {
  for (unsigned seed : {1u, 2u, 3u, 4u, 5u}) {
    const Eigen::MatrixXd a = random_matrix(15, 6, seed);
    const Eigen::MatrixXd sigma = random_spd(15, seed + 100);
    const Eigen::VectorXd f = random_matrix(6, 1, seed + 200);
    const Eigen::VectorXd estimate = reduce_linear(a * f, a, sigma);
    CHECK((estimate - f).cwiseAbs().maxCoeff() < 1e-8);
  }
}

TEST_CASE("stacked inversions with unit covariance average the arms") {
  const GridShape grid{4, 4};
  const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(16, 16);
  const MeasurementModel model =
      build_measurement_operator({1.0, 1.0, 1.0}, {eye, eye, eye}, grid);
  const Eigen::VectorXd xi = random_matrix(48, 1, 50);
  const Eigen::MatrixXd p = inversion_permutation(grid);
  const Eigen::VectorXd averaged =
      (p * xi.segment(0, 16) + p * xi.segment(16, 16) +
       p * xi.segment(32, 16)) /
      3.0;
  const Eigen::VectorXd estimate =
      reduce_linear(xi, model.a, Eigen::MatrixXd::Identity(48, 48));
  CHECK((estimate - averaged).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("reduce_linear rejects inconsistent dimensions") {
  const Eigen::MatrixXd a = random_matrix(8, 3, 60);
  const Eigen::MatrixXd sigma = Eigen::MatrixXd::Identity(8, 8);
  const Eigen::VectorXd xi = random_matrix(7, 1, 61);
  CHECK_THROWS_AS(reduce_linear(xi, a, sigma), std::invalid_argument);
  const Eigen::VectorXd xi8 = random_matrix(8, 1, 62);
  CHECK_THROWS_AS(
      reduce_linear(xi8, a, Eigen::MatrixXd::Identity(7, 7)),
      std::invalid_argument);
  CHECK_THROWS_AS(
      reduce_linear(xi8, a, sigma, Eigen::MatrixXd::Identity(4, 4)),
      std::invalid_argument);
}

TEST_CASE("unit-box projection clamps, keeps, and is idempotent") {
  Eigen::VectorXd v(3);
  v << -0.2, 0.5, 1.3;
  Eigen::VectorXd expected(3);
  expected << 0.0, 0.5, 1.0;
  CHECK((project_unit_box(v) - expected).cwiseAbs().maxCoeff() == 0.0);

  const Eigen::VectorXd inside = (random_matrix(9, 1, 70).array().tanh() + 1.0) / 2.0;
  CHECK((project_unit_box(inside) - inside).cwiseAbs().maxCoeff() == 0.0);
  CHECK((project_unit_box(project_unit_box(v)) - project_unit_box(v))
            .cwiseAbs()
            .maxCoeff() == 0.0);
}

TEST_CASE("unit-box projection is non-expansive") {
  std::mt19937 rng(71);
  std::normal_distribution<double> dist(0.0, 2.0);
  for (int trial = 0; trial < 50; ++trial) {
    Eigen::VectorXd u(6), v(6);
    for (int k = 0; k < 6; ++k) {
      u[k] = dist(rng);
      v[k] = dist(rng);
    }
    CHECK((project_unit_box(u) - project_unit_box(v)).norm() <=
          (u - v).norm() + 1e-15);
  }
}

TEST_CASE("noise covariance re-estimation is build_covariance at the estimate") {
  PhysicalParams p;
  p.zeta = 0.8;
  p.coupling_ratio = 0.4;
  p.grid = {2, 2};
  const ConverterMatrix q = converter_matrix(p);

  const ObjectImage zero = ObjectImage::constant({2, 2}, 0.0);
  CHECK(estimate_noise_covariance(zero, q, 5).sigma.cwiseAbs().maxCoeff() <
        1e-14);

  const ObjectImage ones = ObjectImage::constant({2, 2}, 1.0);
  CHECK((estimate_noise_covariance(ones, q, 5).sigma -
         build_covariance(ones, q, 5).sigma)
            .cwiseAbs()
            .maxCoeff() == 0.0);

  // Fixed point: re-estimating at the truth reproduces the acquisition
  // covariance.
  ObjectImage truth{{2, 2}, Eigen::VectorXd(4)};
  truth.values << 0.9, 0.2, 0.6, 0.4;
  CHECK((estimate_noise_covariance(truth, q, 5).sigma -
         build_covariance(truth, q, 5).sigma)
            .cwiseAbs()
            .maxCoeff() == 0.0);
}

namespace {

struct SmallSetup {
  GridShape grid{3, 3};
  ConverterMatrix q;
  MeasurementModel model;
  ObjectImage truth;
  CovarianceBlocks sigma;

  explicit SmallSetup(long n_frames = 50)
      : q(converter_matrix([] {
          PhysicalParams p;
          p.zeta = 0.8;
          p.coupling_ratio = 0.4;
          p.grid = {3, 3};
          return p;
        }())),
        model(build_measurement_operator(q, {3, 3})),
        truth{{3, 3}, Eigen::VectorXd(9)},
        sigma{} {
    truth.values << 0.7, 0.3, 0.5, 0.2, 0.8, 0.4, 0.6, 0.35, 0.75;
    sigma = build_covariance(truth, q, n_frames);
  }
};

}  // namespace

TEST_CASE("iterate_reduction recovers interior truth from exact data") {
  const SmallSetup s;
  const Eigen::VectorXd xi = s.model.a * s.truth.values;
  ReductionConfig config;
  const ReductionResult result =
      iterate_reduction(xi, s.model, s.q, 50, config);
  CHECK((result.estimate.values - s.truth.values).cwiseAbs().maxCoeff() <
        1e-6);
  CHECK(result.iterations <= config.max_iters);
  CHECK(result.diagnostics.back().estimate_change < config.conv_tol);
}

TEST_CASE("huge kappa makes the pseudo-measurement weightless") {
  const SmallSetup s;
  const Eigen::VectorXd xi =
      sample_acquisition(s.model, s.sigma, s.truth, 99).xi;
  // A covariance provider that ignores f isolates the kappa effect: with
  // kappa -> infinity the second pass must reproduce the first.
  const CovarianceProvider fixed_cov = [&](const ObjectImage&) {
    return s.sigma.sigma;
  };
  ReductionConfig one;
  one.max_iters = 1;
  const Eigen::VectorXd first =
      iterate_reduction(xi, s.model, fixed_cov, one).estimate.values;
  ReductionConfig two;
  two.max_iters = 2;
  two.kappa = 1e12;
  two.conv_tol = 1e-300;  // force the second pass
  const Eigen::VectorXd second =
      iterate_reduction(xi, s.model, fixed_cov, two).estimate.values;
  CHECK((first - second).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("augmented pass equals the literally stacked system") {
  const SmallSetup s;
  const Eigen::VectorXd xi =
      sample_acquisition(s.model, s.sigma, s.truth, 7).xi;
  const double kappa = 0.37;
  const CovarianceProvider fixed_cov = [&](const ObjectImage&) {
    return s.sigma.sigma;
  };
  ReductionConfig config;
  config.max_iters = 2;
  config.kappa = kappa;
  config.conv_tol = 1e-300;
  const Eigen::VectorXd internal =
      iterate_reduction(xi, s.model, fixed_cov, config).estimate.values;

  // Replicate by hand: pass 1 plain, pass 2 on the stacked system.
  const Eigen::VectorXd first =
      project_unit_box(reduce_linear(xi, s.model.a, s.sigma.sigma));
  const int n = 9;
  Eigen::MatrixXd a_tilde(27 + n, n);
  a_tilde << s.model.a, Eigen::MatrixXd::Identity(n, n);
  Eigen::MatrixXd sigma_tilde = Eigen::MatrixXd::Zero(27 + n, 27 + n);
  sigma_tilde.topLeftCorner(27, 27) = s.sigma.sigma;
  sigma_tilde.bottomRightCorner(n, n) =
      kappa * Eigen::MatrixXd::Identity(n, n);
  Eigen::VectorXd xi_tilde(27 + n);
  xi_tilde << xi, first;
  const Eigen::VectorXd by_hand =
      project_unit_box(reduce_linear(xi_tilde, a_tilde, sigma_tilde));
  CHECK((internal - by_hand).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("iterate_reduction is invariant under joint rescaling") {
  // With an explicit kappa the estimate must not change under
  // xi -> l xi, A -> l A, Sigma -> l^2 Sigma.
  const SmallSetup s;
  const Eigen::VectorXd xi =
      sample_acquisition(s.model, s.sigma, s.truth, 11).xi;
  ReductionConfig config;
  config.kappa = 0.5;
  config.max_iters = 4;
  const double lambda = 7.3;

  const CovarianceProvider base_cov = [&](const ObjectImage& f) {
    return build_covariance(f, s.q, 50).sigma;
  };
  const CovarianceProvider scaled_cov = [&](const ObjectImage& f) {
    return (lambda * lambda * build_covariance(f, s.q, 50).sigma).eval();
  };
  MeasurementModel scaled_model = s.model;
  scaled_model.a *= lambda;

  const Eigen::VectorXd base =
      iterate_reduction(xi, s.model, base_cov, config).estimate.values;
  const Eigen::VectorXd scaled =
      iterate_reduction((lambda * xi).eval(), scaled_model, scaled_cov, config)
          .estimate.values;
  CHECK((base - scaled).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("iterate_reduction rejects a non-identity ideal device") {
  const SmallSetup s;
  const Eigen::VectorXd xi = s.model.a * s.truth.values;
  ReductionConfig config;
  config.u = 2.0 * Eigen::MatrixXd::Identity(9, 9);
  CHECK_THROWS_AS(iterate_reduction(xi, s.model, s.q, 50, config),
                  std::invalid_argument);
}

TEST_CASE("reduction beats least squares and single arms in MSE") {
  const SmallSetup s(20);
  const int trials = 10000;
  const Eigen::MatrixXd factor = covariance_factor(s.sigma.sigma);
  const Eigen::MatrixXd p = inversion_permutation(s.grid);

  // Precompute the three estimators as linear maps.
  const Eigen::MatrixXd sigma_pinv = pseudoinverse_symmetric(s.sigma.sigma);
  const Eigen::MatrixXd g = s.model.a.transpose() * sigma_pinv * s.model.a;
  const Eigen::MatrixXd r_red =
      pseudoinverse_symmetric(g) * s.model.a.transpose() * sigma_pinv;
  const Eigen::MatrixXd r_ols = pseudoinverse(s.model.a);

  NormalDeviates normal(2024);
  Eigen::VectorXd z(factor.cols());
  const Eigen::VectorXd mean = s.model.a * s.truth.values;
  std::vector<double> d_ols(trials);
  std::array<std::vector<double>, 3> d_arm;
  d_arm.fill(std::vector<double>(trials));
  for (int t = 0; t < trials; ++t) {
    for (Eigen::Index k = 0; k < z.size(); ++k) z[k] = normal.next();
    const Eigen::VectorXd xi = mean + factor * z;
    const double mse_red =
        (r_red * xi - s.truth.values).squaredNorm() / 9.0;
    d_ols[t] = mse_red - (r_ols * xi - s.truth.values).squaredNorm() / 9.0;
    for (int arm = 0; arm < 3; ++arm) {
      const Eigen::VectorXd single =
          p * xi.segment(9 * arm, 9) / s.model.c_coeffs[arm];
      d_arm[arm][t] =
          mse_red - (single - s.truth.values).squaredNorm() / 9.0;
    }
  }
  auto mean_and_se = [&](const std::vector<double>& d) {
    double m = 0.0;
    for (double v : d) m += v;
    m /= d.size();
    double var = 0.0;
    for (double v : d) var += (v - m) * (v - m);
    var /= (d.size() - 1.0);
    return std::pair{m, std::sqrt(var / d.size())};
  };
  const auto [m_ols, se_ols] = mean_and_se(d_ols);
  CHECK(m_ols <= 2.0 * se_ols);
  for (int arm = 0; arm < 3; ++arm) {
    const auto [m, se] = mean_and_se(d_arm[arm]);
    CHECK(m <= 2.0 * se);
  }
}

TEST_CASE("effective resolution: zero noise allows the finest device") {
  const GridShape grid{8, 8};
  const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(64, 64);
  const MeasurementModel model =
      build_measurement_operator({1.0, 1.0, 1.0}, {eye, eye, eye}, grid);
  const Eigen::MatrixXd zero = Eigen::MatrixXd::Zero(192, 192);
  const auto curve =
      effective_resolution_curve(model.a, zero, {1e-12, 1.0, 100.0}, grid);
  for (const auto& [budget, rank] : curve) CHECK(rank == 64);
}

TEST_CASE("effective resolution is linear for white noise") {
  const GridShape grid{16, 16};
  const int n = 256;
  const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(n, n);
  const MeasurementModel model =
      build_measurement_operator({1.0, 1.0, 1.0}, {eye, eye, eye}, grid);
  const double noise = 0.09;
  const Eigen::MatrixXd sigma =
      noise * Eigen::MatrixXd::Identity(3 * n, 3 * n);

  // Orthonormal binning at factor b costs MSE = sigma^2/3 * N/b^2, so a 4x
  // budget buys a 2x finer pixel: achievable rank is linear in the budget.
  const double mse_fine = noise / 3.0 * n;
  const std::vector<double> budgets = {mse_fine / 16.0 * 1.0001,
                                       mse_fine / 4.0 * 1.0001,
                                       mse_fine * 1.0001};
  const auto curve =
      effective_resolution_curve(model.a, sigma, budgets, grid);
  CHECK(curve[0].second == n / 16);
  CHECK(curve[1].second == n / 4);
  CHECK(curve[2].second == n);
}

TEST_CASE("a singular instrument caps the achievable rank") {
  const GridShape grid{8, 8};
  // One arm only, summed 2x2 detector quadruples: rank 16 of 64.
  const Eigen::MatrixXd b = binning_matrix(grid, 2, BinWeights::Sum);
  const Eigen::MatrixXd a = b * inversion_permutation(grid);
  const Eigen::MatrixXd sigma =
      0.01 * Eigen::MatrixXd::Identity(a.rows(), a.rows());
  const auto curve =
      effective_resolution_curve(a, sigma, {1e9}, grid);
  CHECK(curve[0].second == 16);
}

TEST_CASE("reduction config is validated") {
  ReductionConfig config;
  config.kappa = -1.0;
  CHECK_THROWS_AS(config.validate(), std::invalid_argument);
  config = ReductionConfig{};
  config.pinv_tol = 0.0;
  CHECK_THROWS_AS(config.validate(), std::invalid_argument);
  config = ReductionConfig{};
  config.max_iters = 0;
  CHECK_THROWS_AS(config.validate(), std::invalid_argument);
  CHECK_NOTHROW(ReductionConfig{}.validate());
}
