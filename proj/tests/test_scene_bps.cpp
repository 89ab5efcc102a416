#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "sast/bps.hpp"
#include "sast/normalize.hpp"
#include "sast/rng.hpp"

using namespace sast;

TEST_CASE("generate_basis determinism and bounds") {
    BasisPointSet a = generate_basis(5, 2048, 5.0);
    BasisPointSet b = generate_basis(5, 2048, 5.0);
    CHECK(a.points == b.points);
    CHECK(a.count() == 2048);
    double max_norm = 0;
    for (int64_t i = 0; i < a.count(); ++i) {
        double x = a.points[static_cast<size_t>(3 * i)];
        double y = a.points[static_cast<size_t>(3 * i + 1)];
        double z = a.points[static_cast<size_t>(3 * i + 2)];
        max_norm = std::max(max_norm, std::sqrt(x * x + y * y + z * z));
    }
    CHECK(max_norm <= 5.0);
    BasisPointSet c = generate_basis(6, 2048, 5.0);
    CHECK(a.points != c.points);
}

TEST_CASE("encoding dimensionality is 2048 + 13 = 2061") {
    CHECK(kObjectEncodingDim == 2061);
    BasisPointSet basis = generate_basis(1, 2048, 5.0);
    SceneObject obj;
    obj.object_type = ObjectType::chair;
    obj.points = {0.f, 0.f, 0.f};
    ObjectEncoding enc = bps_encode(obj, basis);
    CHECK(enc.distances.size() == 2048);
    CHECK(enc.type_onehot.size() == 13);
    CHECK(enc.concat().size() == 2061);
    double onehot_sum = 0;
    for (double v : enc.type_onehot) onehot_sum += v;
    CHECK(onehot_sum == 1.0);
    CHECK(enc.type_onehot[static_cast<size_t>(ObjectType::chair)] == 1.0);
}

TEST_CASE("hand-computed distances for tiny basis") {
    BasisPointSet basis;
    basis.points = {1.0, 0.0, 0.0, 0.0, 2.0, 0.0};
    SUBCASE("cloud at the origin") {
        auto enc = bps_encode_points({0.0, 0.0, 0.0}, ObjectType::chair, basis);
        CHECK(enc.distances[0] == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(enc.distances[1] == doctest::Approx(2.0).epsilon(1e-12));
    }
    SUBCASE("cloud on the first basis point") {
        auto enc = bps_encode_points({1.0, 0.0, 0.0}, ObjectType::chair, basis);
        CHECK(enc.distances[0] == doctest::Approx(0.0).epsilon(1e-12));
        CHECK(enc.distances[1] == doctest::Approx(std::sqrt(5.0)).epsilon(1e-12));
    }
}

TEST_CASE("encoding invariances on random clouds") {
    BasisPointSet basis = generate_basis(2, 64, 5.0);
    Rng rng(10);
    for (int rep = 0; rep < 20; ++rep) {
        std::vector<double> cloud;
        const int M = 1 + static_cast<int>(rng.uniform_int(20));
        for (int i = 0; i < 3 * M; ++i) cloud.push_back(rng.uniform(-3.0, 3.0));
        auto enc = bps_encode_points(cloud, ObjectType::table, basis);

        for (double d : enc.distances) CHECK(d >= 0.0);

        // Superset monotonicity: adding a point never increases a distance.
        std::vector<double> bigger = cloud;
        bigger.push_back(rng.uniform(-3.0, 3.0));
        bigger.push_back(rng.uniform(-3.0, 3.0));
        bigger.push_back(rng.uniform(-3.0, 3.0));
        auto enc2 = bps_encode_points(bigger, ObjectType::table, basis);
        for (size_t b = 0; b < enc.distances.size(); ++b)
            CHECK(enc2.distances[b] <= enc.distances[b] + 1e-15);

        // Permutation and duplication invariance.
        std::vector<double> permuted;
        for (int i = M - 1; i >= 0; --i)
            for (int d = 0; d < 3; ++d)
                permuted.push_back(cloud[static_cast<size_t>(3 * i + d)]);
        permuted.insert(permuted.end(), cloud.begin(), cloud.begin() + 3);
        auto enc3 = bps_encode_points(permuted, ObjectType::table, basis);
        CHECK(enc3.distances == enc.distances);
    }
}

TEST_CASE("isometry: moving basis and cloud together preserves distances") {
    BasisPointSet basis = generate_basis(3, 32, 5.0);
    Rng rng(11);
    for (int rep = 0; rep < 10; ++rep) {
        std::vector<double> cloud;
        for (int i = 0; i < 15; ++i) cloud.push_back(rng.uniform(-2.0, 2.0));
        auto before = bps_encode_points(cloud, ObjectType::sofa, basis);

        AffineTransform2D t{rng.uniform(-3.0, 3.0), rng.uniform(-2.0, 2.0),
                            rng.uniform(-2.0, 2.0)};
        BasisPointSet moved_basis = basis;
        for (size_t i = 0; i + 2 < moved_basis.points.size(); i += 3) {
            double x = moved_basis.points[i], y = moved_basis.points[i + 1];
            t.apply_point(x, y);
            moved_basis.points[i] = x;
            moved_basis.points[i + 1] = y;
        }
        std::vector<double> moved_cloud = cloud;
        for (size_t i = 0; i + 2 < moved_cloud.size(); i += 3) {
            double x = moved_cloud[i], y = moved_cloud[i + 1];
            t.apply_point(x, y);
            moved_cloud[i] = x;
            moved_cloud[i + 1] = y;
        }
        auto after = bps_encode_points(moved_cloud, ObjectType::sofa, moved_basis);
        for (size_t b = 0; b < before.distances.size(); ++b)
            CHECK(after.distances[b] == doctest::Approx(before.distances[b]).epsilon(1e-9));
    }
}

TEST_CASE("encode_scene preserves object order and handles degenerates") {
    BasisPointSet basis = generate_basis(4, 16, 5.0);
    SUBCASE("empty scene") {
        SceneEncoding enc = encode_scene({}, basis);
        CHECK(enc.objects.empty());
    }
    SUBCASE("order preserved, identity transform equals omitted") {
        SceneObject a, b;
        a.object_type = ObjectType::sink;
        a.points = {1.f, 0.f, 0.f};
        b.object_type = ObjectType::fridge;
        b.points = {0.f, 1.f, 0.f};
        AffineTransform2D identity;
        SceneEncoding none = encode_scene({a, b}, basis);
        SceneEncoding ident = encode_scene({a, b}, basis, &identity);
        REQUIRE(none.objects.size() == 2);
        CHECK(none.objects[0].type_onehot[static_cast<size_t>(ObjectType::sink)] == 1.0);
        CHECK(none.objects[1].type_onehot[static_cast<size_t>(ObjectType::fridge)] == 1.0);
        CHECK(none.objects[0].distances == ident.objects[0].distances);
        CHECK(none.objects[1].distances == ident.objects[1].distances);
    }
    SUBCASE("empty point cloud is an error") {
        SceneObject empty;
        empty.object_type = ObjectType::wall;
        CHECK_THROWS_AS(encode_scene({empty}, basis), std::invalid_argument);
    }
}
