// SPDX-License-Identifier: Apache-2.0
//
// rissim: standalone RIS beam selection and initial-access simulator
// Copyright (C) 2026 The rissim authors
// ------------------------------------------------------------------------

#include "rissim/beams.hpp"

#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

using namespace rissim;

namespace {

constexpr double kPi = std::numbers::pi;

FreqChannel random_channel(std::mt19937_64 &rng, int K, int M)
{
    std::normal_distribution<double> n(0.0, 1.0);
    std::vector<cplx> d(static_cast<std::size_t>(K * M));
    for (cplx &v : d)
        v = {n(rng), n(rng)};
    return FreqChannel(K, M, d);
}

FreqChannel flat_channel(std::span<const cplx> v, int K)
{
    std::vector<cplx> d;
    for (int k = 0; k < K; ++k)
        d.insert(d.end(), v.begin(), v.end());
    return FreqChannel(K, static_cast<int>(v.size()), d);
}

CVector random_los(std::mt19937_64 &rng, int rows, int cols)
{
    std::uniform_real_distribution<double> ang(-1.2, 1.2);
    std::uniform_real_distribution<double> ph(-kPi, kPi);
    const double az = ang(rng);
    const double el = 0.5 * ang(rng);
    const cplx g = std::polar(1.0, ph(rng));
    CVector v = array_response(ArrayGeometry(rows, cols), az, el);
    for (cplx &x : v)
        x *= g;
    return v;
}

PhaseCodebook random_codebook(std::mt19937_64 &rng, std::size_t size, std::size_t M)
{
    std::uniform_real_distribution<double> ph(-kPi, kPi);
    PhaseCodebook cb;
    for (std::size_t j = 0; j < size; ++j) {
        std::vector<double> p(M);
        for (double &x : p)
            x = ph(rng);
        cb.beams.emplace_back(p);
    }
    return cb;
}

// Rate with every product and exponential written out per term.
double scalar_rate(const FreqChannel &hT, const FreqChannel &hR, const ReflectBeam &psi, double pt, double n0)
{
    const int K = hT.subcarriers();
    const double snr = pt / (K * n0);
    double acc = 0.0;
    for (int k = 0; k < K; ++k) {
        double re = 0.0;
        double im = 0.0;
        for (int m = 0; m < hT.elements(); ++m) {
            const cplx prod = hR.at(k, m) * hT.at(k, m);
            const double c = std::cos(psi.phases()[static_cast<std::size_t>(m)]);
            const double s = std::sin(psi.phases()[static_cast<std::size_t>(m)]);
            re += prod.real() * c - prod.imag() * s;
            im += prod.real() * s + prod.imag() * c;
        }
        acc += std::log(1.0 + snr * (re * re + im * im)) / std::log(2.0);
    }
    return acc / K;
}

std::size_t scan_ue(const FreqChannel &h, const PhaseCodebook &Q)
{
    std::size_t best = 0;
    double best_v = -1.0;
    for (std::size_t j = 0; j < Q.size(); ++j) {
        double v = 0.0;
        for (int k = 0; k < h.subcarriers(); ++k) {
            cplx s = 0.0;
            for (int m = 0; m < h.elements(); ++m)
                s += std::conj(h.at(k, m)) * std::exp(cplx(0.0, -Q[j].phases()[static_cast<std::size_t>(m)]));
            v += std::norm(s);
        }
        if (v > best_v) {
            best_v = v;
            best = j;
        }
    }
    return best;
}

std::size_t scan_bs(const FreqChannel &h, const PhaseCodebook &P)
{
    std::size_t best = 0;
    double best_v = -1.0;
    for (std::size_t i = 0; i < P.size(); ++i) {
        double v = 0.0;
        for (int k = 0; k < h.subcarriers(); ++k) {
            cplx s = 0.0;
            for (int m = 0; m < h.elements(); ++m)
                s += h.at(k, m) * std::exp(cplx(0.0, P[i].phases()[static_cast<std::size_t>(m)]));
            v += std::norm(s);
        }
        if (v > best_v) {
            best_v = v;
            best = i;
        }
    }
    return best;
}

// Largest |sum c_m e^{j phi_m}| over every quantized phase assignment.
double brute_alignment(std::span<const cplx> c, int bits)
{
    const std::size_t L = std::size_t{1} << bits;
    std::size_t total = 1;
    for (std::size_t m = 0; m < c.size(); ++m)
        total *= L;
    double best = 0.0;
    for (std::size_t j = 0; j < total; ++j) {
        std::size_t rest = j;
        cplx s = 0.0;
        for (const cplx &x : c) {
            s += x * std::polar(1.0, 2.0 * kPi * static_cast<double>(rest % L) / static_cast<double>(L));
            rest /= L;
        }
        best = std::max(best, std::abs(s));
    }
    return best;
}

} // namespace

TEST_SUITE("phases and beams")
{
    TEST_CASE("wrap_phase lands in [-pi, pi)")
    {
        CHECK(wrap_phase(kPi) == doctest::Approx(-kPi));
        CHECK(wrap_phase(-kPi) == doctest::Approx(-kPi));
        CHECK(wrap_phase(3.0 * kPi / 2.0) == doctest::Approx(-kPi / 2.0));
        std::mt19937_64 rng(1);
        std::uniform_real_distribution<double> u(-50.0, 50.0);
        for (int i = 0; i < 1000; ++i) {
            const double x = u(rng);
            const double w = wrap_phase(x);
            CHECK(w >= -kPi);
            CHECK(w < kPi);
            CHECK(std::abs(std::polar(1.0, w) - std::polar(1.0, x)) < 1e-9);
        }
    }

    TEST_CASE("quantize_phase snaps to the nearest level")
    {
        CHECK(quantize_phase(0.1, 2) == doctest::Approx(0.0));
        CHECK(quantize_phase(kPi / 2.0 - 0.1, 2) == doctest::Approx(kPi / 2.0));
        CHECK_THROWS_AS(quantize_phase(0.0, 0), std::invalid_argument);
    }

    TEST_CASE("beam product adds phases")
    {
        const ReflectBeam a({0.5, -1.0, 3.0});
        const ReflectBeam b({1.0, 2.0, 1.0});
        const ReflectBeam c = a * b;
        for (std::size_t m = 0; m < 3; ++m)
            CHECK(std::abs(c.element(m) - a.element(m) * b.element(m)) < 1e-12);
        for (std::size_t m = 0; m < 3; ++m)
            CHECK(std::abs(std::abs(c.element(m)) - 1.0) < 1e-15);
    }
}

TEST_SUITE("codebooks")
{
    TEST_CASE("unquantized DFT beams conjugate the grid responses")
    {
        const ArrayGeometry g(4, 8);
        const PhaseCodebook cb = make_dft_codebook(g, {1, 1, 0});
        REQUIRE(cb.size() == 32);
        CHECK(cb.kind == CodebookKind::DftUpa);
        for (int iv = 0; iv < 4; ++iv)
            for (int iu = 0; iu < 8; ++iu) {
                const double u = (iu - 4) / (0.5 * 8);
                const double v = (iv - 2) / (0.5 * 4);
                const ReflectBeam &b = cb[static_cast<std::size_t>(iv * 8 + iu)];
                for (int r = 0; r < 4; ++r)
                    for (int c = 0; c < 8; ++c) {
                        const cplx want = std::polar(1.0, -2.0 * kPi * 0.5 * (c * u + r * v));
                        CHECK(std::abs(b.element(static_cast<std::size_t>(r * 8 + c)) - want) < 1e-9);
                    }
            }
        // A realizable grid direction matches the conjugated array response.
        const double el = std::asin(0.5);
        const double az = std::asin(0.25 / std::cos(el));
        const CVector a = array_response(g, az, el);
        const ReflectBeam &b = cb[static_cast<std::size_t>(3 * 8 + 5)];
        for (std::size_t m = 0; m < a.size(); ++m)
            CHECK(std::abs(b.element(m) - std::conj(a[m])) < 1e-9);
    }

    TEST_CASE("DFT beams are unit modulus and quantized to 3 bits")
    {
        const PhaseCodebook cb = make_dft_codebook(ArrayGeometry(8, 8));
        CHECK(cb.size() == 64);
        const double step = 2.0 * kPi / 8.0;
        for (const ReflectBeam &b : cb.beams)
            for (double p : b.phases()) {
                const double r = p / step;
                CHECK(std::abs(r - std::round(r)) < 1e-9);
            }
    }

    TEST_CASE("oversampling multiplies the codebook size")
    {
        CHECK(make_dft_codebook(ArrayGeometry(2, 4), {2, 3, 3}).size() == 48);
    }

    TEST_CASE("full quantized set enumerates every level combination")
    {
        const PhaseCodebook cb = make_quantized_all_codebook(3, 2);
        CHECK(cb.size() == 64);
        for (std::size_t j = 0; j < cb.size(); ++j)
            for (std::size_t k = 0; k < j; ++k)
                CHECK_FALSE(cb[j] == cb[k]);
        CHECK_THROWS_AS(make_quantized_all_codebook(11, 2), std::invalid_argument);
    }

    TEST_CASE("text export round-trips exactly and hashes stably")
    {
        const PhaseCodebook cb = make_dft_codebook(ArrayGeometry(2, 4), {2, 1, 0});
        std::stringstream ss;
        write_codebook(ss, cb);
        const PhaseCodebook back = read_codebook(ss);
        REQUIRE(back.size() == cb.size());
        for (std::size_t j = 0; j < cb.size(); ++j)
            CHECK(back[j] == cb[j]);
        CHECK(back.kind == cb.kind);
        CHECK(back.phase_bits == cb.phase_bits);
        CHECK(codebook_hash(back) == codebook_hash(cb));
        CHECK(codebook_hash(cb) != codebook_hash(make_dft_codebook(ArrayGeometry(2, 4))));
        CHECK(codebook_hash(cb).size() == 64);
    }

    TEST_CASE("malformed codebook text is rejected")
    {
        std::istringstream bad("# rissim-codebook v1 kind=custom bits=0 elements=2 size=1\n0 0.1\n");
        CHECK_THROWS(read_codebook(bad));
    }

    TEST_CASE("empty or ragged codebooks fail validation")
    {
        PhaseCodebook empty;
        CHECK_THROWS_AS(empty.validate(), std::invalid_argument);
        PhaseCodebook ragged;
        ragged.beams = {ReflectBeam({0.0, 0.0}), ReflectBeam({0.0})};
        CHECK_THROWS_AS(ragged.validate(), std::invalid_argument);
    }
}

TEST_SUITE("beam sets")
{
    TEST_CASE("indices are sorted and unique")
    {
        BeamSet s({5, 1, 5, 3});
        CHECK(std::vector<std::size_t>(s.indices().begin(), s.indices().end()) == std::vector<std::size_t>{1, 3, 5});
        s.insert(2);
        s.insert(3);
        CHECK(s.size() == 4);
        CHECK(s.contains(2));
        CHECK_FALSE(s.contains(4));
    }

    TEST_CASE("out-of-codebook indices are rejected")
    {
        CHECK_THROWS_AS(BeamSet({0, 8}).validate(8), std::out_of_range);
        CHECK_NOTHROW(BeamSet({0, 7}).validate(8));
    }

    TEST_CASE("reference vectors must be unit modulus")
    {
        CHECK_THROWS_AS(ReferenceVector(CVector{{1.0, 0.0}, {0.5, 0.0}}), std::invalid_argument);
    }
}

TEST_SUITE("rate")
{
    TEST_CASE("zero transmit power gives zero rate")
    {
        std::mt19937_64 rng(2);
        const FreqChannel a = random_channel(rng, 3, 4);
        const FreqChannel b = random_channel(rng, 3, 4);
        CHECK(achievable_rate(a, b, ReflectBeam({0, 0, 0, 0}), LinkBudget{0.0, 1.0}) == 0.0);
    }

    TEST_CASE("unit single-element link carries one bit")
    {
        const FreqChannel one(1, 1, {cplx(1.0)});
        CHECK(achievable_rate(one, one, ReflectBeam({0.0}), LinkBudget{1.0, 1.0}) == doctest::Approx(1.0));
    }

    TEST_CASE("random instances match the scalar expansion")
    {
        std::mt19937_64 rng(3);
        for (int t = 0; t < 20; ++t) {
            const FreqChannel a = random_channel(rng, 2, 4);
            const FreqChannel b = random_channel(rng, 2, 4);
            const ReflectBeam psi = random_codebook(rng, 1, 4)[0];
            CHECK(achievable_rate(a, b, psi, LinkBudget{3.0, 0.7}) ==
                  doctest::Approx(scalar_rate(a, b, psi, 3.0, 0.7)).epsilon(1e-12));
        }
    }

    TEST_CASE("shape mismatches are rejected")
    {
        std::mt19937_64 rng(4);
        const FreqChannel a = random_channel(rng, 2, 4);
        const FreqChannel b = random_channel(rng, 2, 3);
        CHECK_THROWS_AS(achievable_rate(a, b, ReflectBeam({0, 0, 0, 0}), LinkBudget{}), std::invalid_argument);
        CHECK_THROWS_AS(achievable_rate(a, a, ReflectBeam({0, 0, 0}), LinkBudget{}), std::invalid_argument);
        CHECK_THROWS_AS(equal_gain_rate(a, b, LinkBudget{}), std::invalid_argument);
    }
}

TEST_SUITE("beam selection")
{
    TEST_CASE("single-beam codebooks pick index 0")
    {
        std::mt19937_64 rng(5);
        const FreqChannel a = random_channel(rng, 2, 3);
        const FreqChannel b = random_channel(rng, 2, 3);
        const PhaseCodebook one = random_codebook(rng, 1, 3);
        const JointSelection s = joint_beam_search(a, b, one, one, LinkBudget{});
        CHECK(s.p_index == 0);
        CHECK(s.q_index == 0);
        CHECK(s.rate == doctest::Approx(achievable_rate(a, b, one[0] * one[0], LinkBudget{})));
        CHECK(decoupled_bs_beam(a, one, ReferenceVector::ones(3)) == 0);
        CHECK(decoupled_ue_beam(b, one, ReferenceVector::ones(3)) == 0);
    }

    TEST_CASE("joint search matches a double loop")
    {
        std::mt19937_64 rng(6);
        for (int t = 0; t < 5; ++t) {
            const FreqChannel a = random_channel(rng, 3, 8);
            const FreqChannel b = random_channel(rng, 3, 8);
            const PhaseCodebook P = random_codebook(rng, 16, 8);
            const PhaseCodebook Q = random_codebook(rng, 16, 8);
            std::size_t bi = 0, bj = 0;
            double best = -1.0;
            for (std::size_t i = 0; i < 16; ++i)
                for (std::size_t j = 0; j < 16; ++j) {
                    const double r = scalar_rate(a, b, P[i] * Q[j], 1.0, 1.0);
                    if (r > best + 1e-12) {
                        best = r;
                        bi = i;
                        bj = j;
                    }
                }
            const JointSelection s = joint_beam_search(a, b, P, Q, LinkBudget{});
            CHECK(s.p_index == bi);
            CHECK(s.q_index == bj);
            CHECK(s.rate == doctest::Approx(best).epsilon(1e-12));
        }
    }

    TEST_CASE("joint search ties resolve to the smallest pair")
    {
        const FreqChannel one(1, 2, {cplx(1.0), cplx(1.0)});
        PhaseCodebook cb;
        cb.beams = {ReflectBeam({0.0, 0.0}), ReflectBeam({0.0, 0.0})};
        const JointSelection s = joint_beam_search(one, one, cb, cb, LinkBudget{});
        CHECK(s.p_index == 0);
        CHECK(s.q_index == 0);
        CHECK(decoupled_ue_beam(one, cb, ReferenceVector::ones(2)) == 0);
    }

    TEST_CASE("decoupled selections equal independent scans")
    {
        std::mt19937_64 rng(7);
        for (int t = 0; t < 100; ++t) {
            const int M = 2 + t % 15;
            const std::size_t N = 4 + static_cast<std::size_t>(t % 61);
            const FreqChannel hT = random_channel(rng, 1 + t % 4, M);
            const FreqChannel hR = random_channel(rng, 1 + t % 4, M);
            const PhaseCodebook P = random_codebook(rng, N, static_cast<std::size_t>(M));
            const PhaseCodebook Q = random_codebook(rng, N, static_cast<std::size_t>(M));
            const ReferenceVector a = ReferenceVector::ones(static_cast<std::size_t>(M));
            CHECK(decoupled_bs_beam(hT, P, a) == scan_bs(hT, P));
            CHECK(decoupled_ue_beam(hR, Q, a) == scan_ue(hR, Q));
        }
    }

    TEST_CASE("LoS BS side picks the conjugate-matching quantized beam")
    {
        std::mt19937_64 rng(8);
        const int bits = 2;
        const double step = 2.0 * kPi / 4.0;
        std::uniform_int_distribution<int> lvl(0, 3);
        for (int t = 0; t < 10; ++t) {
            CVector h(4);
            std::vector<double> neg(4);
            for (std::size_t m = 0; m < 4; ++m) {
                const double ph = lvl(rng) * step;
                h[m] = std::polar(1.0, ph);
                neg[m] = quantize_phase(-ph, bits);
            }
            const FreqChannel hT = flat_channel(h, 2);
            const PhaseCodebook P = make_quantized_all_codebook(4, bits);
            const ReferenceVector a = ReferenceVector::ones(4);
            const std::size_t idx = decoupled_bs_beam(hT, P, a);
            CHECK(bs_alignment(hT, P[idx], a) == doctest::Approx(bs_alignment(hT, ReflectBeam(neg), a)));
            CHECK(bs_alignment(hT, P[idx], a) == doctest::Approx(16.0));
            // Any maximizer differs from the negation by a common offset.
            const double off = wrap_phase(P[idx].phases()[0] - neg[0]);
            for (std::size_t m = 1; m < 4; ++m)
                CHECK(std::abs(std::polar(1.0, P[idx].phases()[m] - neg[m]) - std::polar(1.0, off)) < 1e-9);
        }
    }

    TEST_CASE("LoS UE side picks the conjugate-matching quantized beam")
    {
        std::mt19937_64 rng(18);
        const double step = 2.0 * kPi / 4.0;
        std::uniform_int_distribution<int> lvl(0, 3);
        CVector h(3);
        for (cplx &x : h)
            x = std::polar(1.0, lvl(rng) * step);
        const FreqChannel hR = flat_channel(h, 1);
        const PhaseCodebook Q = make_quantized_all_codebook(3, 2);
        const std::size_t idx = decoupled_ue_beam(hR, Q, ReferenceVector::ones(3));
        CHECK(ue_alignment(hR, Q[idx], ReferenceVector::ones(3)) == doctest::Approx(9.0));
    }

    TEST_CASE("scaling h_R by a positive real keeps the UE-side index")
    {
        std::mt19937_64 rng(9);
        for (int t = 0; t < 20; ++t) {
            FreqChannel h = random_channel(rng, 2, 6);
            const PhaseCodebook Q = random_codebook(rng, 32, 6);
            const std::size_t before = decoupled_ue_beam(h, Q, ReferenceVector::ones(6));
            h.scale(0.37 + t);
            CHECK(decoupled_ue_beam(h, Q, ReferenceVector::ones(6)) == before);
        }
    }

    TEST_CASE("optimal beam set collects per-UE choices")
    {
        std::mt19937_64 rng(10);
        const PhaseCodebook Q = make_dft_codebook(ArrayGeometry(4, 4), {1, 1, 0});
        CHECK(optimal_beam_set({}, Q, ReferenceVector::ones(16)).empty());

        const FreqChannel h = flat_channel(random_los(rng, 4, 4), 2);
        const std::vector<FreqChannel> twins{h, h};
        CHECK(optimal_beam_set(twins, Q, ReferenceVector::ones(16)).size() == 1);

        // Three UEs sitting exactly on distinct grid directions.
        std::vector<FreqChannel> three;
        std::vector<std::size_t> expect;
        for (std::size_t j : {std::size_t{1}, std::size_t{6}, std::size_t{13}}) {
            CVector v(16);
            for (std::size_t m = 0; m < 16; ++m)
                v[m] = std::conj(Q[j].element(m));
            three.push_back(flat_channel(v, 2));
            expect.push_back(scan_ue(three.back(), Q));
        }
        const BeamSet s = optimal_beam_set(three, Q, ReferenceVector::ones(16));
        CHECK(s.size() == 3);
        CHECK(std::vector<std::size_t>(s.indices().begin(), s.indices().end()) == expect);
    }

    TEST_CASE("best rate within a set never drops as beams are added")
    {
        std::mt19937_64 rng(11);
        const FreqChannel a = random_channel(rng, 4, 8);
        const FreqChannel b = random_channel(rng, 4, 8);
        const PhaseCodebook Q = random_codebook(rng, 40, 8);
        const ReflectBeam p = random_codebook(rng, 1, 8)[0];
        double best = 0.0;
        for (std::size_t j = 0; j < Q.size(); ++j) {
            const double next = std::max(best, achievable_rate(a, b, p * Q[j], LinkBudget{}));
            CHECK(next >= best);
            best = next;
        }
    }
}

TEST_SUITE("equal-gain bound")
{
    TEST_CASE("flat LoS matches the single matched beam")
    {
        std::mt19937_64 rng(12);
        const FreqChannel hT = flat_channel(random_los(rng, 2, 4), 3);
        const FreqChannel hR = flat_channel(random_los(rng, 2, 4), 3);
        std::vector<double> ph(8);
        for (std::size_t m = 0; m < 8; ++m)
            ph[m] = -std::arg(hT.at(0, static_cast<int>(m)) * hR.at(0, static_cast<int>(m)));
        const LinkBudget b{2.0, 1.0};
        CHECK(equal_gain_rate(hT, hR, b) == doctest::Approx(achievable_rate(hT, hR, ReflectBeam(ph), b)));
    }

    TEST_CASE("single element reduces to the scalar formula")
    {
        std::mt19937_64 rng(13);
        const FreqChannel hT = random_channel(rng, 5, 1);
        const FreqChannel hR = random_channel(rng, 5, 1);
        const LinkBudget b{5.0, 1.0};
        double ref = 0.0;
        for (int k = 0; k < 5; ++k)
            ref += std::log2(1.0 + b.snr(5) * std::norm(hR.at(k, 0) * hT.at(k, 0)));
        CHECK(equal_gain_rate(hT, hR, b) == doctest::Approx(ref / 5.0));
    }

    TEST_CASE("dominates every sampled beam")
    {
        std::mt19937_64 rng(14);
        for (int t = 0; t < 20; ++t) {
            const FreqChannel hT = random_channel(rng, 4, 6);
            const FreqChannel hR = random_channel(rng, 4, 6);
            const double eg = equal_gain_rate(hT, hR, LinkBudget{});
            for (const ReflectBeam &psi : random_codebook(rng, 200, 6).beams)
                CHECK(achievable_rate(hT, hR, psi, LinkBudget{}) <= eg * (1.0 + 1e-12));
        }
    }
}

TEST_SUITE("LoS optimality")
{
    TEST_CASE("quantized alignment matches brute force")
    {
        std::mt19937_64 rng(15);
        std::normal_distribution<double> n(0.0, 1.0);
        for (int t = 0; t < 60; ++t) {
            const int M = 1 + t % 5;
            const int bits = 1 + t % 3;
            if (M * bits > 12)
                continue;
            CVector c(static_cast<std::size_t>(M));
            for (cplx &x : c)
                x = {n(rng), n(rng)};
            const std::vector<double> ph = best_quantized_alignment(c, bits);
            cplx s = 0.0;
            for (std::size_t m = 0; m < c.size(); ++m)
                s += c[m] * std::polar(1.0, ph[m]);
            CHECK(std::abs(s) == doctest::Approx(brute_alignment(c, bits)).epsilon(1e-12));
        }
    }

    TEST_CASE("two elements with one bit match full enumeration")
    {
        std::mt19937_64 rng(16);
        const FreqChannel hT = flat_channel(random_los(rng, 1, 2), 1);
        const FreqChannel hR = flat_channel(random_los(rng, 1, 2), 1);
        const PhaseCodebook all = make_quantized_all_codebook(2, 1);
        const ReferenceVector a = ReferenceVector::ones(2);
        double joint = 0.0;
        for (const ReflectBeam &psi : all.beams)
            joint = std::max(joint, achievable_rate(hT, hR, psi, LinkBudget{}));
        const ReflectBeam dec = all[decoupled_bs_beam(hT, all, a)] * all[decoupled_ue_beam(hR, all, a)];
        const double dec_rate = achievable_rate(hT, hR, dec, LinkBudget{});
        const LosGapResult r = los_optimality_gap(hT, hR, 1);
        CHECK(r.joint_rate == doctest::Approx(joint));
        CHECK(r.decoupled_rate == doctest::Approx(dec_rate));
        CHECK(r.gap == doctest::Approx(1.0 - dec_rate / joint));
    }

    TEST_CASE("gap vanishes with 8-bit phases at small M")
    {
        std::mt19937_64 rng(17);
        for (int t = 0; t < 20; ++t) {
            const FreqChannel hT = flat_channel(random_los(rng, 2, 4), 2);
            const FreqChannel hR = flat_channel(random_los(rng, 2, 4), 2);
            CHECK(los_optimality_gap(hT, hR, 8).gap < 1e-3);
        }
    }

    TEST_CASE("matched conjugate channels give zero gap")
    {
        std::mt19937_64 rng(19);
        const CVector v = random_los(rng, 2, 2);
        CVector w(v.size());
        for (std::size_t m = 0; m < v.size(); ++m)
            w[m] = std::conj(v[m]);
        const LosGapResult r = los_optimality_gap(flat_channel(v, 2), flat_channel(w, 2), 3);
        CHECK(r.gap == doctest::Approx(0.0));
    }

    TEST_CASE("non-flat input is rejected")
    {
        std::mt19937_64 rng(20);
        const FreqChannel h = random_channel(rng, 2, 3);
        CHECK_THROWS_AS(los_optimality_gap(h, h, 4), std::invalid_argument);
    }
}
