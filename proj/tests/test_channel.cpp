#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "aeic/channel.hpp"
#include "aeic/rng.hpp"

using namespace aeic;

namespace {

ChannelSpec spec_at(double ebn0_db, double alpha = 0.0, std::size_t m = 2,
                    std::size_t n = 4, std::size_t k = 4) {
    ChannelSpec s;
    s.m = m;
    s.alpha = alpha;
    s.ebn0_db = ebn0_db;
    s.n = n;
    s.k = k;
    return s;
}

}  // namespace

TEST_CASE("ebn0_to_sigma2: frozen values for the n/(2k 10^(dB/10)) convention") {
    CHECK(ebn0_to_sigma2(spec_at(0.0)) == 0.5);
    CHECK(ebn0_to_sigma2(spec_at(7.0)) ==
          doctest::Approx(0.099763115748444).epsilon(1e-12));
    CHECK(ebn0_to_sigma2(spec_at(10.0)) == doctest::Approx(0.05).epsilon(1e-15));
    CHECK(ebn0_to_sigma2(spec_at(300.0)) < 1e-12);  // ebn0 -> inf limit

    // convention is per-component: n=1, k=2 (QPSK shape) at 0 dB
    CHECK(ebn0_to_sigma2(spec_at(0.0, 0.0, 1, 1, 2)) == doctest::Approx(0.25));

    ChannelSpec bad = spec_at(0.0);
    bad.n = 0;
    CHECK_THROWS_AS(ebn0_to_sigma2(bad), std::invalid_argument);
    bad = spec_at(std::nan(""));
    CHECK_THROWS_AS(ebn0_to_sigma2(bad), std::invalid_argument);
}

TEST_CASE("linear_snr: 0.5 per-component signal power over sigma^2") {
    CHECK(linear_snr(spec_at(0.0)) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(linear_snr(spec_at(7.0)) ==
          doctest::Approx(5.011872336272722).epsilon(1e-12));
    CHECK(linear_snr(spec_at(10.0)) == doctest::Approx(10.0).epsilon(1e-15));
}

TEST_CASE("inr_from_snr: INR = SNR^alpha") {
    CHECK(inr_from_snr(10.0, 2.0) == doctest::Approx(100.0).epsilon(1e-12));
    CHECK(inr_from_snr(5.011872336272722, 0.0) == 1.0);
    CHECK(inr_from_snr(4.0, 0.5) == doctest::Approx(2.0).epsilon(1e-12));
    CHECK_THROWS_AS(inr_from_snr(0.0, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(inr_from_snr(-1.0, 1.0), std::invalid_argument);
}

TEST_CASE("mixing coefficient: SNR^((alpha-1)/2), frozen at 7 dB") {
    CHECK(mixing_coefficient(spec_at(7.0, 1.0)) == 1.0);  // alpha = 1 exactly
    CHECK(mixing_coefficient(spec_at(-3.0, 1.0)) == 1.0);

    const struct {
        double alpha, expected;
    } cases[] = {
        {0.2, 0.5248074602497727}, {0.5, 0.6683439175686147},
        {0.8, 0.8511380382023765}, {1.5, 1.4962356560944334},
        {2.0, 2.2387211385683394}, {4.0, 11.22018454301963},
    };
    for (const auto& c : cases) {
        CHECK(mixing_coefficient(spec_at(7.0, c.alpha)) ==
              doctest::Approx(c.expected).epsilon(1e-12));
    }

    // SNR = 4 exactly at ebn0 = 10*log10(4); alpha = 2 gives sqrt(INR/SNR) = 2
    const double db4 = 10.0 * std::log10(4.0);
    CHECK(mixing_coefficient(spec_at(db4, 2.0)) == doctest::Approx(2.0).epsilon(1e-12));

    // above/below one exactly when SNR > 1
    CHECK(mixing_coefficient(spec_at(7.0, 0.7)) < 1.0);
    CHECK(mixing_coefficient(spec_at(7.0, 1.3)) > 1.0);
}

TEST_CASE("add_awgn: sample moments over 2e5 draws") {
    RngStream rng(4242);
    const std::size_t n_samples = 200000;
    const double sigma2 = 0.25;
    std::vector<double> x(n_samples, 0.0);
    add_awgn(x, sigma2, rng);
    double mean = 0.0;
    for (double v : x) mean += v;
    mean /= static_cast<double>(n_samples);
    double var = 0.0;
    for (double v : x) var += (v - mean) * (v - mean);
    var /= static_cast<double>(n_samples - 1);
    CHECK(std::abs(mean) < 4.0 * std::sqrt(sigma2 / n_samples));
    CHECK(var > 0.95 * sigma2);
    CHECK(var < 1.05 * sigma2);

    // sigma2 = 0 adds exactly nothing but still consumes the stream
    std::vector<double> y = {1.0, -2.0};
    RngStream rng2(1);
    add_awgn(y, 0.0, rng2);
    CHECK(y[0] == 1.0);
    CHECK(y[1] == -2.0);
}

TEST_CASE("interference_apply: m=1 is byte-identical to plain AWGN") {
    ChannelSpec spec = spec_at(7.0, /*alpha=*/3.0, /*m=*/1);
    std::vector<double> x(2 * spec.n);
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = 0.1 * static_cast<double>(i);

    RngStream rng_a(99);
    const auto y = interference_apply({x}, spec, rng_a);
    REQUIRE(y.size() == 1);

    std::vector<double> ref = x;
    RngStream rng_b(99);
    add_awgn(ref, ebn0_to_sigma2(spec), rng_b);
    for (std::size_t i = 0; i < ref.size(); ++i) CHECK(y[0][i] == ref[i]);
}

TEST_CASE("interference_apply: alpha=1 superposition with vanishing noise") {
    // 600 dB: sigma^2 ~ 5e-62, far below the 1e-12 check tolerance
    ChannelSpec spec = spec_at(600.0, 1.0, 3);
    std::vector<std::vector<double>> x(3, std::vector<double>(2 * spec.n, 0.0));
    for (std::size_t u = 0; u < 3; ++u) {
        for (std::size_t c = 0; c < x[u].size(); ++c) {
            x[u][c] = static_cast<double>(u + 1) + 0.01 * static_cast<double>(c);
        }
    }
    RngStream rng(7);
    const auto y = interference_apply(x, spec, rng);
    REQUIRE(y.size() == 3);
    for (std::size_t u = 0; u < 3; ++u) {
        for (std::size_t c = 0; c < y[u].size(); ++c) {
            double expected = 0.0;
            for (std::size_t j = 0; j < 3; ++j) expected += x[j][c];
            CHECK(y[u][c] == doctest::Approx(expected).epsilon(1e-12));
        }
    }
}

TEST_CASE("interference_apply: shape validation") {
    ChannelSpec spec = spec_at(7.0, 1.0, 2);
    std::vector<double> ok(2 * spec.n, 0.0);
    RngStream rng(1);
    CHECK_THROWS_AS(interference_apply({ok}, spec, rng), std::invalid_argument);
    std::vector<double> wrong(3, 0.0);
    CHECK_THROWS_AS(interference_apply({ok, wrong}, spec, rng),
                    std::invalid_argument);
}

TEST_CASE("interference_apply: deterministic given seed") {
    ChannelSpec spec = spec_at(4.0, 0.8, 2);
    std::vector<std::vector<double>> x = {std::vector<double>(8, 1.0),
                                          std::vector<double>(8, -0.5)};
    RngStream a(2025), b(2025);
    const auto ya = interference_apply(x, spec, a);
    const auto yb = interference_apply(x, spec, b);
    for (std::size_t u = 0; u < 2; ++u) {
        for (std::size_t c = 0; c < 8; ++c) CHECK(ya[u][c] == yb[u][c]);
    }
}

TEST_CASE("receive_user1: hand arithmetic with coefficient 2 and zero noise") {
    // the SNR=4, alpha=2 example: coefficient sqrt(INR/SNR) = sqrt(16/4) = 2
    Tensor x1(8, 1);
    x1(0, 0) = 1.0;
    Tensor x2(8, 1);
    x2(1, 0) = 1.0;
    RngStream rng(3);
    const Tensor y = receive_user1(x1, {x2}, 2.0, 0.0, rng);
    CHECK(y(0, 0) == doctest::Approx(1.0));
    CHECK(y(1, 0) == doctest::Approx(2.0));
    for (std::size_t r = 2; r < 8; ++r) CHECK(y(r, 0) == 0.0);

    Tensor bad(4, 1);
    CHECK_THROWS_WITH_AS(receive_user1(x1, {bad}, 1.0, 0.0, rng),
                         doctest::Contains("4x1"), std::invalid_argument);
}

TEST_CASE("regime classification: boundary inclusions and names") {
    CHECK(classify_regime(0.0, 2).name == Regime::noisy);
    CHECK(classify_regime(0.49, 2).name == Regime::noisy);
    CHECK(classify_regime(0.5, 2).name == Regime::weak);  // boundary joins weak
    CHECK(classify_regime(0.6, 2).name == Regime::weak);
    CHECK(classify_regime(2.0 / 3.0, 2).name == Regime::moderate);
    CHECK(classify_regime(0.99, 2).name == Regime::moderate);
    CHECK(classify_regime(1.0, 2).name == Regime::boundary_alpha_1);
    CHECK(classify_regime(1.01, 2).name == Regime::strong);
    CHECK(classify_regime(1.99, 2).name == Regime::strong);
    CHECK(classify_regime(2.0, 2).name == Regime::very_strong);
    CHECK(classify_regime(37.0, 2).name == Regime::very_strong);

    CHECK(regime_name(Regime::noisy) == "noisy");
    CHECK(regime_name(Regime::weak) == "weak");
    CHECK(regime_name(Regime::moderate) == "moderate");
    CHECK(regime_name(Regime::boundary_alpha_1) == "boundary_alpha_1");
    CHECK(regime_name(Regime::strong) == "strong");
    CHECK(regime_name(Regime::very_strong) == "very_strong");

    CHECK_THROWS_AS(classify_regime(-0.1, 2), std::invalid_argument);
    CHECK_THROWS_AS(classify_regime(1.0, 0), std::invalid_argument);
}

TEST_CASE("regime dof: frozen sample points of d(alpha)") {
    CHECK(classify_regime(0.0, 2).dof == doctest::Approx(1.0));
    CHECK(classify_regime(0.25, 2).dof == doctest::Approx(0.75));
    CHECK(classify_regime(0.5, 2).dof == doctest::Approx(0.5));
    CHECK(classify_regime(0.6, 2).dof == doctest::Approx(0.6));
    CHECK(classify_regime(2.0 / 3.0, 2).dof == doctest::Approx(2.0 / 3.0));
    CHECK(classify_regime(0.8, 2).dof == doctest::Approx(0.6));
    CHECK(classify_regime(1.0, 2).dof == doctest::Approx(0.5));
    CHECK(classify_regime(1.0, 3).dof == doctest::Approx(1.0 / 3.0));
    CHECK(classify_regime(1.5, 2).dof == doctest::Approx(0.75));
    CHECK(classify_regime(2.0, 2).dof == doctest::Approx(1.0));
    CHECK(classify_regime(3.7, 2).dof == doctest::Approx(1.0));
}

TEST_CASE("regime dof: continuity for m=2 and bounded range") {
    // d(alpha) is continuous on [0, 2.5] for m = 2 (the alpha = 1 point
    // carries 1/m = 0.5, matching both one-sided limits).
    double prev = classify_regime(0.0, 2).dof;
    for (int i = 1; i <= 250; ++i) {
        const double alpha = 0.01 * static_cast<double>(i);
        const double d = classify_regime(alpha, 2).dof;
        CHECK(std::abs(d - prev) <= 0.011);
        CHECK(d > 0.0);
        CHECK(d <= 1.0);
        prev = d;
    }
}

TEST_CASE("qpsk oracle: frozen closed-form values") {
    CHECK(qpsk_ser_oracle(0.0) ==
          doctest::Approx(0.15111344691562303).epsilon(1e-12));
    CHECK(qpsk_ser_oracle(2.0) ==
          doctest::Approx(0.07360554705337573).epsilon(1e-12));
    CHECK(qpsk_ser_oracle(4.0) ==
          doctest::Approx(0.024845365629787498).epsilon(1e-12));
    CHECK(qpsk_ser_oracle(6.0) ==
          doctest::Approx(0.004770877629011326).epsilon(1e-12));
    CHECK(qpsk_ser_oracle(100.0) < 1e-12);  // limit

    double prev = 1.0;
    for (int db = -2; db <= 10; ++db) {
        const double ser = qpsk_ser_oracle(static_cast<double>(db));
        CHECK(ser < prev);
        prev = ser;
    }
}

TEST_CASE("qpsk monte carlo at 4 dB matches the oracle within 3 sigma") {
    // QPSK as the n=1, k=2 case of the convention: one complex channel use
    // (2 reals at amplitude sqrt(0.5) each, codeword energy 1 = n), decided
    // componentwise by sign.
    const ChannelSpec spec = spec_at(4.0, 0.0, 1, 1, 2);
    const double sigma2 = ebn0_to_sigma2(spec);
    const double amp = std::sqrt(0.5);
    const std::size_t n_symbols = 1000000;

    RngStream rng(777);
    std::size_t errors = 0;
    double sym[2];
    for (std::size_t s = 0; s < n_symbols; ++s) {
        const double i_sign = rng.uniform_index(2) == 0 ? 1.0 : -1.0;
        const double q_sign = rng.uniform_index(2) == 0 ? 1.0 : -1.0;
        sym[0] = amp * i_sign;
        sym[1] = amp * q_sign;
        add_awgn(std::span<double>(sym, 2), sigma2, rng);
        if ((sym[0] > 0.0) != (i_sign > 0.0) || (sym[1] > 0.0) != (q_sign > 0.0)) {
            ++errors;
        }
    }
    const double ser = static_cast<double>(errors) / static_cast<double>(n_symbols);
    const double oracle = qpsk_ser_oracle(4.0);
    const double mc_std = std::sqrt(oracle * (1.0 - oracle) / n_symbols);
    INFO("mc ser ", ser, " oracle ", oracle, " std ", mc_std);
    CHECK(std::abs(ser - oracle) <= 3.0 * mc_std);
}
