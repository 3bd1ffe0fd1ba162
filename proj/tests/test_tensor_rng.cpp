#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <random>
#include <set>
#include <stdexcept>

#include "aeic/rng.hpp"
#include "aeic/tensor.hpp"

using namespace aeic;

TEST_CASE("tensor shape and storage invariants") {
    Tensor t(3, 4, 1.5);
    CHECK(t.rows == 3);
    CHECK(t.cols == 4);
    CHECK(t.size() == 12);
    CHECK(t.v.size() == t.rows * t.cols);
    CHECK(t(2, 3) == 1.5);
    t(1, 2) = -2.0;
    CHECK(t.v[1 * 4 + 2] == -2.0);  // row-major layout

    CHECK_FALSE(t.has_grad());
    t.alloc_grad();
    CHECK(t.has_grad());
    CHECK(t.grad.size() == t.v.size());
    t.grad[0] = 7.0;
    t.alloc_grad();  // re-allocation clears to zero
    CHECK(t.grad[0] == 0.0);

    CHECK(t.all_finite());
    t(0, 0) = std::nan("");
    CHECK_FALSE(t.all_finite());
}

TEST_CASE("matmul matches hand-computed 2x2 example") {
    // [[1,2],[3,4]] * [1,1]^T = [3,7]^T
    Tensor w(2, 2);
    w(0, 0) = 1;
    w(0, 1) = 2;
    w(1, 0) = 3;
    w(1, 1) = 4;
    Tensor x(2, 1, 1.0);
    const Tensor y = matmul(w, x);
    CHECK(y.rows == 2);
    CHECK(y.cols == 1);
    CHECK(y(0, 0) == doctest::Approx(3.0));
    CHECK(y(1, 0) == doctest::Approx(7.0));
}

TEST_CASE("matmul rejects mismatched inner dimensions, naming both shapes") {
    Tensor a(2, 3), b(4, 2);
    CHECK_THROWS_WITH_AS(matmul(a, b), doctest::Contains("2x3"),
                         std::invalid_argument);
    CHECK_THROWS_WITH_AS(matmul(a, b), doctest::Contains("4x2"),
                         std::invalid_argument);
}

TEST_CASE("transposed products agree with explicit matmul") {
    RngStream rng(11);
    Tensor a(3, 5), b(3, 4), c(4, 5);
    for (double& x : a.v) x = rng.normal();
    for (double& x : b.v) x = rng.normal();
    for (double& x : c.v) x = rng.normal();

    // a^T b: (5x3)*(3x4)
    Tensor at(5, 3);
    for (std::size_t r = 0; r < 3; ++r)
        for (std::size_t col = 0; col < 5; ++col) at(col, r) = a(r, col);
    const Tensor ref1 = matmul(at, b);
    const Tensor got1 = matmul_at_b(a, b);
    REQUIRE(got1.rows == ref1.rows);
    REQUIRE(got1.cols == ref1.cols);
    for (std::size_t i = 0; i < ref1.size(); ++i) {
        CHECK(got1.v[i] == doctest::Approx(ref1.v[i]).epsilon(1e-12));
    }

    // b c^T... use a * c^T: (3x5)*(5x4) via c^T
    Tensor ct(5, 4);
    for (std::size_t r = 0; r < 4; ++r)
        for (std::size_t col = 0; col < 5; ++col) ct(col, r) = c(r, col);
    const Tensor ref2 = matmul(a, ct);
    const Tensor got2 = matmul_a_bt(a, c);
    REQUIRE(got2.rows == ref2.rows);
    REQUIRE(got2.cols == ref2.cols);
    for (std::size_t i = 0; i < ref2.size(); ++i) {
        CHECK(got2.v[i] == doctest::Approx(ref2.v[i]).epsilon(1e-12));
    }
}

TEST_CASE("add_column_inplace and row_sums") {
    Tensor x(2, 3);
    for (std::size_t i = 0; i < x.size(); ++i) x.v[i] = static_cast<double>(i);
    Tensor col(2, 1);
    col(0, 0) = 10;
    col(1, 0) = -1;
    add_column_inplace(x, col);
    CHECK(x(0, 0) == 10.0);
    CHECK(x(0, 2) == 12.0);
    CHECK(x(1, 1) == 3.0);

    const Tensor sums = row_sums(x);
    CHECK(sums.rows == 2);
    CHECK(sums.cols == 1);
    CHECK(sums(0, 0) == doctest::Approx(10 + 11 + 12));
    CHECK(sums(1, 0) == doctest::Approx(2 + 3 + 4));

    Tensor bad(3, 1);
    CHECK_THROWS_AS(add_column_inplace(x, bad), std::invalid_argument);
}

TEST_CASE("RngStream is exactly std::mt19937_64 on the raw path") {
    // The documented generator contract: raw draws are the standard-pinned
    // mt19937_64 sequence, so streams reproduce on any conforming platform.
    RngStream stream(12345);
    std::mt19937_64 reference(12345);
    for (int i = 0; i < 100; ++i) {
        CHECK(stream.next_u64() == reference());
    }
    CHECK(stream.seed() == 12345);
}

TEST_CASE("uniform lies in [0,1) and reproduces by seed") {
    RngStream a(7), b(7);
    for (int i = 0; i < 1000; ++i) {
        const double u = a.uniform();
        CHECK(u >= 0.0);
        CHECK(u < 1.0);
        CHECK(u == b.uniform());
    }
}

TEST_CASE("normal moments over 1e5 samples") {
    RngStream rng(99);
    const int n = 100000;
    double sum = 0.0, sumsq = 0.0;
    for (int i = 0; i < n; ++i) {
        const double x = rng.normal();
        sum += x;
        sumsq += x * x;
    }
    const double mean = sum / n;
    const double var = sumsq / n - mean * mean;
    CHECK(std::abs(mean) < 4.0 / std::sqrt(static_cast<double>(n)));
    CHECK(var == doctest::Approx(1.0).epsilon(0.05));
}

TEST_CASE("uniform_index is in range and roughly uniform") {
    RngStream rng(3);
    const std::size_t n = 13;
    std::vector<int> counts(n, 0);
    const int draws = 130000;
    for (int i = 0; i < draws; ++i) {
        const std::size_t v = rng.uniform_index(n);
        REQUIRE(v < n);
        ++counts[v];
    }
    for (int c : counts) {
        CHECK(c > draws / static_cast<int>(n) * 0.9);
        CHECK(c < draws / static_cast<int>(n) * 1.1);
    }
    CHECK_THROWS_AS(rng.uniform_index(0), std::invalid_argument);
}

TEST_CASE("derived streams: same label reproduces, labels separate streams") {
    RngStream a = seed_stream(42, "experiment/point0");
    RngStream b = seed_stream(42, "experiment/point0");
    for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());

    // Collision check across labels and masters: first 10^4 draws differ
    // somewhere (and in practice immediately).
    RngStream c = seed_stream(42, "experiment/point1");
    RngStream d = seed_stream(43, "experiment/point0");
    RngStream e = seed_stream(42, "experiment/point0");
    bool c_differs = false, d_differs = false;
    for (int i = 0; i < 10000; ++i) {
        const std::uint64_t ref = e.next_u64();
        c_differs = c_differs || (c.next_u64() != ref);
        d_differs = d_differs || (d.next_u64() != ref);
    }
    CHECK(c_differs);
    CHECK(d_differs);
}

TEST_CASE("derive_seed is a pure function of (master, label)") {
    CHECK(derive_seed(1, "x") == derive_seed(1, "x"));
    CHECK(derive_seed(1, "x") != derive_seed(1, "y"));
    CHECK(derive_seed(1, "x") != derive_seed(2, "x"));
    // distinct across a batch of labels
    std::set<std::uint64_t> seen;
    for (int i = 0; i < 1000; ++i) {
        seen.insert(derive_seed(7, "stream" + std::to_string(i)));
    }
    CHECK(seen.size() == 1000);
}

TEST_CASE("seed_streams rejects duplicate labels") {
    CHECK_NOTHROW(seed_streams(5, {"a", "b", "c"}));
    CHECK_THROWS_AS(seed_streams(5, {"a", "b", "a"}), std::invalid_argument);
    auto streams = seed_streams(5, {"a", "b"});
    REQUIRE(streams.size() == 2);
    CHECK(streams[0].next_u64() != streams[1].next_u64());
}
