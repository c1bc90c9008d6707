#include <cmath>

#include <doctest.h>

#include "splitkin/grid_field.hpp"
#include "splitkin/sde_solver.hpp"

using namespace splitkin;

namespace {

Field random_field(const TorusGrid& grid, std::uint64_t tag) {
    Field f(grid);
    RngStream rng{977, tag, 0};
    for (std::size_t i = 0; i < f.size(); ++i) f[i] = rng.normal(0, i);
    return f;
}

}  // namespace

TEST_CASE("torus grid has unit measure") {
    for (int n : {2, 17, 64, 128}) {
        TorusGrid g(1, n);
        CHECK(std::fabs(g.dx() * n - 1.0) <= 1e-12);
    }
    TorusGrid g2(2, 32);
    CHECK(std::fabs(g2.cell_measure() * static_cast<double>(g2.total_cells()) - 1.0) <= 1e-12);
}

TEST_CASE("lp_norm basics") {
    TorusGrid g(1, 64);
    // constant field on the unit torus: every Lp norm equals the constant
    Field c(g, 2.0);
    CHECK(lp_norm(c, 3.0) == doctest::Approx(2.0).epsilon(1e-13));
    CHECK(lp_norm(c, kInf) == 2.0);

    // indicator of half the cells
    Field ind(g, 0.0);
    for (std::size_t i = 0; i < ind.size() / 2; ++i) ind[i] = 1.0;
    CHECK(lp_norm(ind, 1.0) == doctest::Approx(0.5).epsilon(1e-13));

    CHECK_THROWS_AS(lp_norm(c, 0.5), InvalidExponent);
}

TEST_CASE("lp_norm matches independent re-summation") {
    TorusGrid g(1, 129);
    Field f = random_field(g, 1);
    // plain sequential oracle, different summation order than the library
    double acc = 0.0;
    for (std::size_t i = f.size(); i-- > 0;) acc += f[i] * f[i] * g.dx();
    CHECK(lp_norm(f, 2.0) == doctest::Approx(std::sqrt(acc)).epsilon(1e-13));
}

TEST_CASE("l1_distance basics and shifted indicator") {
    TorusGrid g(1, 64);
    Field f = random_field(g, 2);
    CHECK(l1_distance(f, f) == 0.0);

    Field ones(g, 1.0), zeros(g, 0.0);
    CHECK(l1_distance(ones, zeros) == doctest::Approx(1.0).epsilon(1e-14));

    // indicator of [0, 1/2) shifted by k cells: symmetric difference 2k dx
    Field ind(g, 0.0), shifted(g, 0.0);
    const int k = 5;
    for (int i = 0; i < 32; ++i) ind[static_cast<std::size_t>(i)] = 1.0;
    for (int i = 0; i < 32; ++i) shifted[static_cast<std::size_t>((i + k) % 64)] = 1.0;
    // counting oracle
    double count = 0.0;
    for (std::size_t i = 0; i < 64; ++i) count += std::fabs(ind[i] - shifted[i]) * g.dx();
    CHECK(count == doctest::Approx(2.0 * k * g.dx()).epsilon(1e-14));
    CHECK(l1_distance(ind, shifted) == doctest::Approx(count).epsilon(1e-14));

    TorusGrid other(1, 32);
    CHECK_THROWS_AS(l1_distance(f, Field(other, 0.0)), GridMismatch);
}

TEST_CASE("lp_norm homogeneity and triangle inequality on random data") {
    TorusGrid g(1, 64);
    for (std::uint64_t trial = 0; trial < 20; ++trial) {
        Field f = random_field(g, 10 + trial);
        Field h = random_field(g, 40 + trial);
        const double c = -2.5 + 0.3 * static_cast<double>(trial);
        for (double p : {1.0, 2.0, 4.0, kInf}) {
            Field cf = f;
            for (std::size_t i = 0; i < cf.size(); ++i) cf[i] *= c;
            CHECK(lp_norm(cf, p) ==
                  doctest::Approx(std::fabs(c) * lp_norm(f, p)).epsilon(1e-13));
            Field sum = f;
            for (std::size_t i = 0; i < sum.size(); ++i) sum[i] += h[i];
            CHECK(lp_norm(sum, p) <= lp_norm(f, p) + lp_norm(h, p) + 1e-12);
        }
    }
}

TEST_CASE("mollifier normalization, support, symmetry") {
    for (double width : {0.02, 0.1, 0.5, 1.7}) {
        Mollifier rho(MollifierKind::space, width);
        CHECK(std::fabs(rho.integral() - 1.0) <= 1e-10);
        CHECK(rho(width * 1.0001) == 0.0);
        CHECK(rho(-width * 1.0001) == 0.0);
        CHECK(rho(0.3 * width) == rho(-0.3 * width));
    }
    auto [rho, psi] = mollifier_pair(0.1, 0.05);
    CHECK(rho.kind() == MollifierKind::space);
    CHECK(psi.kind() == MollifierKind::value);
    CHECK(std::fabs(rho.integral() - 1.0) <= 1e-10);
    CHECK(std::fabs(psi.integral() - 1.0) <= 1e-10);

    // odd moment vanishes for the even profile
    const double d = 0.05;
    const int n = 4096;
    double m1 = 0.0;
    for (int i = 0; i <= n; ++i) {
        const double s = -d + 2.0 * d * i / n;
        m1 += s * psi(s) * (2.0 * d / n);
    }
    CHECK(std::fabs(m1) <= 1e-12);

    CHECK_THROWS_AS(Mollifier(MollifierKind::space, 0.0), NonPositiveWidth);
}

TEST_CASE("pairwise_sum is order-deterministic and accurate") {
    std::vector<double> vals(1001);
    RngStream rng{3, 9, 0};
    for (std::size_t i = 0; i < vals.size(); ++i) vals[i] = rng.normal(0, i) * 1e3;
    const double a = pairwise_sum(vals);
    const double b = pairwise_sum(vals);
    CHECK(a == b);
    long double exact = 0.0L;
    for (double v : vals) exact += v;
    CHECK(std::fabs(a - static_cast<double>(exact)) <= 1e-9);
}
