#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "kamforge/lattice.hpp"
#include "kamforge/rng.hpp"
#include "kamforge/weights.hpp"

using namespace kamforge;

namespace {

Site rand_site(Rng& rng, int d, int r) {
    Site s;
    s.dim = d;
    for (int i = 0; i < d; ++i) s.c[i] = int32_t(rng.uniform_index(2 * r + 1)) - r;
    return s;
}

LatticeModel small_model_2d(double rlat = 8.0) {
    return LatticeModel(2, rlat, {Site{1, 0}}, {});
}

} // namespace

TEST_CASE("pseudo_dist basics") {
    Site a{3, 4}, b{4, 3};
    CHECK(pseudo_dist(a, a) == 0.0);
    CHECK(pseudo_dist(a, -a) == 0.0);
    CHECK(pseudo_dist(a, b) == doctest::Approx(std::sqrt(2.0)).epsilon(1e-14));
    Site z{0, 0};
    CHECK(pseudo_dist(a, z) == doctest::Approx(5.0));
    CHECK_THROWS_AS(pseudo_dist(Site{1}, Site{1, 2}), std::invalid_argument);
}

TEST_CASE("pseudo_dist symmetry and triangle inequality on random triples") {
    Rng rng(11);
    for (int i = 0; i < 2000; ++i) {
        Site a = rand_site(rng, 2, 12), b = rand_site(rng, 2, 12), c = rand_site(rng, 2, 12);
        CHECK(pseudo_dist2_int(a, b) == pseudo_dist2_int(b, a));
        CHECK(pseudo_dist(a, b) <= pseudo_dist(a, c) + pseudo_dist(c, b) + 1e-12);
    }
}

TEST_CASE("weight examples") {
    WeightParams p;
    Site z = Site::zero(2);
    CHECK(weight(z, z, p) == doctest::Approx(1.0));

    WeightParams p2{0.0, 1.0, 0.0, 1.0};
    CHECK(weight(Site{3, 0}, z, p2) == doctest::Approx(3.0));

    WeightParams p3{std::log(2.0), 0.0, 1.0, 1.0};
    CHECK(weight(Site{1, 0}, Site{2, 0}, p3) == doctest::Approx(2.0));
}

TEST_CASE("weight lemma holds with the calibrated constant") {
    const double g1 = 0.3, g2 = 3.0, kap = 1.0;
    const double C = calibrate_weight_constant(2, 10.0, g1, g2, kap, 7);
    CHECK(C >= std::exp2(g2 + kap + 1.0) - 1e-9);
    WeightParams g{g1, g2, kap, C};
    WeightParams g0 = g.with_kappa(0.0);
    Rng rng(99);
    const Site origin = Site::zero(2);
    for (int i = 0; i < 30000; ++i) {
        Site a = rand_site(rng, 2, 10), b = rand_site(rng, 2, 10), c = rand_site(rng, 2, 10);
        CHECK(weight(a, b, g) <= weight(a, c, g0) * weight(c, b, g) * (1 + 1e-12));
        for (double t : {-1.0, 0.5, 1.0}) {
            WeightParams gt{t * g1, t * g2, kap, C};
            CHECK(weight(a, origin, gt) <= weight(a, b, g) * weight(b, origin, gt) * (1 + 1e-12));
        }
    }
}

TEST_CASE("model partition: A, F, Lambda_inf disjoint and exhaustive") {
    LatticeModel m(2, 5.0, {Site{1, 0}, Site{0, 1}}, {Site{2, 0}});
    std::set<int> seen;
    for (int id : m.a_ids()) seen.insert(id);
    for (int id : m.f_ids()) seen.insert(id);
    for (int id : m.inf_ids()) seen.insert(id);
    CHECK(int(seen.size()) == m.n_sites());
    // every ball site present exactly once
    int count = 0;
    for (int x = -5; x <= 5; ++x)
        for (int y = -5; y <= 5; ++y)
            if (x * x + y * y <= 25) {
                ++count;
                CHECK(m.id_of(Site{x, y}) >= 0);
            }
    CHECK(count == m.n_sites());
}

TEST_CASE("decompose Delta=inf gives full spheres") {
    LatticeModel m(2, 6.0, {}, {});
    auto d = decompose(m, DeltaParam::infinite());
    // block of (3,4): all 12 lattice points of norm 5
    const int id = m.id_of(Site{3, 4});
    const auto& blk = d.block(d.block_of(id));
    CHECK(blk.size() == 12);
    for (int b : blk) CHECK(m.site(b).norm2() == 25);
    // sphere radius 5 diameter: max pseudo-dist = sqrt(50)
    CHECK(d.diameter_of(d.block_of(id)) == doctest::Approx(std::sqrt(50.0)));
    // 0 is a singleton
    const int z = m.id_of(Site{0, 0});
    CHECK(d.block(d.block_of(z)).size() == 1);
    CHECK(d.diameter_of(d.block_of(z)) == 0.0);
}

TEST_CASE("decompose Delta=1 on the radius-5 sphere gives antipodal pairs") {
    LatticeModel m(2, 6.0, {}, {});
    auto d = decompose(m, DeltaParam::finite(1.0));
    const std::vector<std::vector<Site>> expect = {
        {Site{3, 4}, Site{-3, -4}}, {Site{4, 3}, Site{-4, -3}}, {Site{4, -3}, Site{-4, 3}},
        {Site{3, -4}, Site{-3, 4}}, {Site{5, 0}, Site{-5, 0}},  {Site{0, 5}, Site{0, -5}}};
    std::set<int> blocks_seen;
    for (const auto& pair : expect) {
        const int b0 = d.block_of(m.id_of(pair[0]));
        const int b1 = d.block_of(m.id_of(pair[1]));
        CHECK(b0 == b1);
        CHECK(d.block(b0).size() == 2);
        blocks_seen.insert(b0);
    }
    CHECK(blocks_seen.size() == 6);
}

TEST_CASE("partition, separation, and monotonicity properties") {
    LatticeModel m(2, 10.0, {}, {Site{11, 0}});
    for (double delta : {1.0, 2.0, 3.0}) {
        auto d = decompose(m, DeltaParam::finite(delta));
        // partition: every w-site in exactly one block
        std::vector<int> hits(m.n_sites(), 0);
        for (int b = 0; b < d.n_blocks(); ++b)
            for (int id : d.block(b)) hits[id]++;
        for (int id : m.inf_ids()) CHECK(hits[id] == 1);
        for (int id : m.f_ids()) CHECK(hits[id] == 1);
        // same-norm within Lambda_inf blocks (exact integer compare)
        for (int b = 0; b < d.n_blocks(); ++b) {
            if (b == d.f_block()) continue;
            for (int id : d.block(b)) CHECK(m.site(id).norm2() == d.sphere_of(b));
        }
        // separation on equal spheres
        for (int b1 = 0; b1 < d.n_blocks(); ++b1)
            for (int b2 = b1 + 1; b2 < d.n_blocks(); ++b2) {
                if (b1 == d.f_block() || b2 == d.f_block()) continue;
                if (d.sphere_of(b1) != d.sphere_of(b2)) continue;
                CHECK(d.block_dist(b1, b2) >= delta);
            }
    }
    // monotonicity: coarser Delta' >= Delta refines into containment
    auto d1 = decompose(m, DeltaParam::finite(1.0));
    auto d3 = decompose(m, DeltaParam::finite(3.0));
    for (int id : m.inf_ids())
        for (int jd : d1.block(d1.block_of(id)))
            CHECK(d3.block_of(jd) == d3.block_of(id));
}

TEST_CASE("block diameter bound shape d_Delta <= C Delta^3 for d*=2") {
    LatticeModel m(2, 30.0, {}, {});
    double prev = -1.0;
    for (double delta : {1.0, 2.0, 3.0, 4.0}) {
        auto d = decompose(m, DeltaParam::finite(delta));
        const double dd = d.diameter();
        CHECK(dd >= prev);
        prev = dd;
        CHECK(dd <= 16.0 * delta * delta * delta);
    }
}
