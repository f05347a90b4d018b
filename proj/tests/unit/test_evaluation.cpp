#include <catch_amalgamated.hpp>

#include <set>

#include "fixtures.hpp"
#include "slcd/evaluation.hpp"

using namespace slcd;
using slcd::testing::random_matrix;
using slcd::testing::truth;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

Matrix rows(std::initializer_list<std::initializer_list<double>> r) {
    Matrix m(static_cast<Eigen::Index>(r.size()), static_cast<Eigen::Index>(r.begin()->size()));
    Eigen::Index i = 0;
    for (const auto& line : r) {
        Eigen::Index j = 0;
        for (double v : line) m(i, j++) = v;
        ++i;
    }
    return m;
}

// Estimated matrices as printed for datasets 2, 4 and 5.
Matrix printed2() {
    return rows({{1, 0, -8.8e-4, 0}, {0, 1, -3.3e-4, 0}, {0.3, 0, -2.7e-4, 0}, {1.002, 1.999, 0, 0}});
}
Matrix printed4() {
    return rows({{0.999, -0.009, 0, 0, 0, 0},
                 {0.016, 0.999, 0, 0, 0, 0},
                 {-0.0432, 0, 0.997, 0, 0, 0},
                 {0.987, 0, 0.3019, 0, 0, 0},
                 {2.048, 2.982, 0, 0, 0, 0},
                 {0, 1.995, 0.483, 0, 0, 0}});
}
Matrix printed5() {
    return rows({{0.997, 0.0525, 0, 0, 0, 0, 0},
                 {-0.082, 0.994, 0, 0, 0, 0, 0},
                 {0.057, 0, 0.998, 0, 0, 0, 0},
                 {1.025, 0, 0.491, 0, 0, 0, 0},
                 {0, 0.956, 2.024, 0, 0, 0, 0},
                 {1.168, 0, 2.986, 0, 0, 0, 0},
                 {0, 0.975, 1.025, 0, 0, 0, 0}});
}

SweepResult fake_sweep(const std::vector<double>& s, const std::vector<double>& l, const std::set<int>& perfect) {
    SweepResult r;
    int k = 0;
    for (const auto& p : grid_product(s, l)) {
        SweepCell c;
        c.point = p;
        MetricBundle m;
        const bool ok = perfect.contains(k++);
        m.precision = ok ? 1.0 : 0.5;
        m.precision_defined = true;
        m.recall = 1.0;
        c.metrics = m;
        r.cells.push_back(c);
    }
    return r;
}

}  // namespace

TEST_CASE("reconstruction error", "[evaluation]") {
    const Dataset ds = sample(builtin_spec(2), 1000, 31);
    CHECK(reconstruction_error(truth(2), ds.x) == 0.0);
    CHECK_THAT(reconstruction_error(Matrix::Zero(4, 4), ds.x), WithinRel(ds.x.squaredNorm() / 4000.0, 1e-14));
    const double e = reconstruction_error(printed2(), ds.x);
    CHECK(e > 0.0);
    CHECK(e < 1e-2);
    CHECK_THROWS_AS(reconstruction_error(Matrix::Zero(3, 3), ds.x), std::invalid_argument);
}

TEST_CASE("structure error", "[evaluation]") {
    CHECK(structure_error(truth(3), truth(3)) == 0.0);
    const double by_hand = std::sqrt(0.002 * 0.002 + 0.001 * 0.001 + 8.8e-4 * 8.8e-4 + 3.3e-4 * 3.3e-4 +
                                     2.7e-4 * 2.7e-4) / 16.0;
    CHECK_THAT(structure_error(printed2(), truth(2)), WithinRel(by_hand, 1e-9));
    CHECK_THAT(structure_error(printed2(), truth(2)), WithinAbs(1.5253e-4, 1e-8));
    CHECK_THROWS_AS(structure_error(Matrix::Zero(3, 3), truth(2)), std::invalid_argument);
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        const Matrix a = random_matrix(5, seed);
        const Matrix b = random_matrix(5, seed + 100);
        const Matrix c = random_matrix(5, seed + 200);
        CHECK_THAT(structure_error(-2.5 * a, -2.5 * b), WithinRel(2.5 * structure_error(a, b), 1e-14));
        CHECK(structure_error(a, c) <= structure_error(a, b) + structure_error(b, c) + 1e-15);
    }
}

TEST_CASE("covariance error", "[evaluation]") {
    const auto spec = builtin_spec(3);
    const Vector v = spec.source_variances();
    const Matrix induced = induced_covariance(truth(3), v);
    CHECK_THAT(covariance_error(truth(3), induced, v), WithinAbs(0.0, 1e-14));

    const Dataset ds = sample(spec, 1000, 32);
    const auto est = sample_covariance(ds);
    Matrix off = est.sigma;
    off.diagonal().setZero();
    CHECK_THAT(covariance_error(Matrix::Identity(5, 5), est.sigma, est.sigma_diag), WithinRel(off.norm() / 25.0, 1e-12));
    const double sampled = covariance_error(truth(3), est.sigma, est.sigma_diag);
    CHECK(sampled > 0.0);
    CHECK(sampled < 0.1 * covariance_error(Matrix::Identity(5, 5), est.sigma, est.sigma_diag));
}

TEST_CASE("edge extraction from printed estimates", "[evaluation]") {
    CHECK(extract_edges(printed2(), 0.15) == EdgeSet{{0, 2}, {0, 3}, {1, 3}});
    CHECK(extract_edges(printed4(), 0.15) == true_edges(StructuralMatrix(truth(4))));
    const EdgeSet e5 = extract_edges(printed5(), 0.15);
    CHECK(e5.size() == 8);
    CHECK(e5 == true_edges(StructuralMatrix(truth(5))));
    CHECK(extract_edges(Matrix::Zero(3, 3), 0.15).empty());
    CHECK(extract_edges(Matrix::Identity(3, 3) * 5.0, 0.15).empty());
    CHECK_THROWS_AS(extract_edges(printed2(), 0.0), std::invalid_argument);
}

TEST_CASE("edge extraction is monotone in the threshold", "[evaluation]") {
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        const Matrix d = random_matrix(6, seed);
        EdgeSet prev = extract_edges(d, 1e-6);
        for (double t : {0.05, 0.1, 0.3, 0.6, 0.9, 1.5}) {
            const EdgeSet cur = extract_edges(d, t);
            CHECK(cur.is_subset_of(prev));
            prev = cur;
        }
    }
}

TEST_CASE("precision and recall", "[evaluation]") {
    const EdgeSet t4 = true_edges(StructuralMatrix(truth(4)));
    const LinkScore s = precision_recall(t4, t4);
    CHECK(s.precision == 1.0);
    CHECK(s.recall == 1.0);
    CHECK(s.correct_links == 6);

    const LinkScore none = precision_recall({}, t4);
    CHECK(none.precision == 0.0);
    CHECK_FALSE(none.precision_defined);
    CHECK(none.recall == 0.0);
    CHECK(none.correct_links == 0);

    EdgeSet extra = true_edges(StructuralMatrix(truth(2)));
    extra.insert({2, 3});
    const LinkScore x = precision_recall(extra, true_edges(StructuralMatrix(truth(2))));
    CHECK(x.precision == 0.75);
    CHECK(x.recall == 1.0);
    CHECK(x.correct_links == 3);

    CHECK_THROWS_AS(precision_recall(t4, {}), std::invalid_argument);
}

TEST_CASE("precision and recall agree with a recount", "[evaluation]") {
    std::mt19937_64 gen(5);
    for (int trial = 0; trial < 50; ++trial) {
        EdgeSet est;
        EdgeSet truth_set;
        const std::size_t n = 6;
        for (std::size_t p = 0; p < n; ++p) {
            for (std::size_t c = 0; c < n; ++c) {
                if (p == c) continue;
                if (gen() % 4 == 0) est.insert({p, c});
                if (gen() % 4 == 0) truth_set.insert({p, c});
            }
        }
        if (truth_set.empty()) truth_set.insert({0, 1});
        std::size_t hits = 0;
        for (const Edge& e : est) hits += truth_set.contains(e) ? 1 : 0;
        const LinkScore s = precision_recall(est, truth_set);
        CHECK(s.correct_links == hits);
        CHECK(s.correct_links <= std::min(est.size(), truth_set.size()));
        CHECK(s.recall == static_cast<double>(hits) / static_cast<double>(truth_set.size()));
        if (!est.empty()) CHECK(s.precision == static_cast<double>(hits) / static_cast<double>(est.size()));
        CHECK(s.precision >= 0.0);
        CHECK(s.precision <= 1.0);
    }
}

TEST_CASE("metrics for a perfect estimate", "[evaluation]") {
    for (int id = 1; id <= kBuiltinCount; ++id) {
        const Dataset ds = sample(builtin_spec(id), 1000, 40);
        for (double theta : {0.01, 0.15, 0.29}) {
            const MetricBundle m = evaluate(truth(id), ds, truth(id), theta);
            CHECK(m.reconstruction_error == 0.0);
            CHECK(m.structure_error == 0.0);
            CHECK(m.covariance_error < 0.05);
            CHECK(m.precision == 1.0);
            CHECK(m.recall == 1.0);
            CHECK(m.correct_links == m.true_links);
        }
    }
    const Dataset d3 = sample(builtin_spec(3), 1000, 41);
    const MetricBundle z = evaluate(Matrix::Zero(5, 5), d3, truth(3));
    CHECK(z.recall == 0.0);
    CHECK_FALSE(z.precision_defined);
    CHECK(z.true_links == 5);
}

TEST_CASE("grids", "[evaluation]") {
    const auto g = grid_product({0.1, 0.2}, {1, 5, 10});
    REQUIRE(g.size() == 6);
    CHECK(g[0] == GridPoint{0.1, 1});
    CHECK(g[1] == GridPoint{0.1, 5});
    CHECK(g[5] == GridPoint{0.2, 10});
    CHECK(default_sigma_grid() == std::vector<double>{0.1, 0.2, 0.3, 0.5, 1.0});
    CHECK(default_lambda_grid() == std::vector<double>{0.5, 1, 2, 5, 10});
}

TEST_CASE("largest perfect region", "[evaluation]") {
    const std::vector<double> ax{1, 2, 3};
    CHECK(largest_perfect_region(fake_sweep(ax, ax, {})) == 0);
    CHECK(largest_perfect_region(fake_sweep(ax, ax, {0, 1, 2, 3, 4, 5, 6, 7, 8})) == 9);
    // Diagonal neighbours do not connect.
    CHECK(largest_perfect_region(fake_sweep(ax, ax, {0, 4, 8})) == 1);
    CHECK(largest_perfect_region(fake_sweep(ax, ax, {0, 1, 4, 8})) == 3);
    SweepResult failed = fake_sweep(ax, ax, {0, 1, 2});
    failed.cells[1].metrics.reset();
    CHECK(largest_perfect_region(failed) == 1);
}

TEST_CASE("single-cell sweep at the operating point", "[evaluation]") {
    const Dataset ds = sample(builtin_spec(3), 1000, 42);
    SolverControls c;
    c.seed = 7;
    const SweepResult r = sweep(ds, truth(3), {{0.3, 5.0}}, Hyperparams{}, c);
    REQUIRE(r.cells.size() == 1);
    REQUIRE(r.cells[0].metrics);
    CHECK(r.cells[0].metrics->precision == 1.0);
    CHECK(r.cells[0].metrics->recall == 1.0);
    CHECK_THROWS_AS(sweep(ds, truth(3), {}, Hyperparams{}, c), std::invalid_argument);
    CHECK_THROWS_AS(sweep(ds, truth(3), {{0.3, 5.0}, {0.3, 5.0}}, Hyperparams{}, c), std::invalid_argument);
}

TEST_CASE("sweep around the operating point", "[evaluation]") {
    const Dataset ds = sample(builtin_spec(2), 1000, 43);
    Hyperparams hp;
    hp.restarts = 5;
    SolverControls c;
    c.seed = 3;
    const SweepResult a = sweep(ds, truth(2), grid_product({0.2, 0.3, 0.5}, {2, 5, 10}), hp, c, 0.15, 1);
    CHECK(largest_perfect_region(a) >= 4);
    const SweepResult b = sweep(ds, truth(2), grid_product({0.2, 0.3, 0.5}, {2, 5, 10}), hp, c, 0.15, 2);
    for (std::size_t k = 0; k < a.cells.size(); ++k) {
        CHECK(a.cells[k].point == b.cells[k].point);
        CHECK(a.cells[k].j_min == b.cells[k].j_min);
    }
    const std::string csv = sweep_csv(a);
    CHECK(csv.rfind("dataset,sigma,lambda,recon_err,struct_err,cov_err,precision,recall,correct_links,wall_ms\n", 0) ==
          0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 10);
}

TEST_CASE("a failing cell does not stop the sweep", "[evaluation]") {
    const Dataset ds = sample(builtin_spec(1), 200, 44);
    Hyperparams hp;
    hp.restarts = 1;
    SolverControls c;
    c.penalty_mu_init = 1e308;
    c.penalty_growth = 1e10;
    const SweepResult r = sweep(ds, truth(1), grid_product({0.3, 0.5}, {5}), hp, c);
    REQUIRE(r.cells.size() == 2);
    CHECK_FALSE(r.cells[0].metrics);
    CHECK_FALSE(r.cells[0].error.empty());
    const std::string csv = sweep_csv(r);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 3);
}
