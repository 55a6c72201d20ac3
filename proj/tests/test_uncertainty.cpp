#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "graphixs/types.hpp"
#include "graphixs/uncertainty.hpp"
#include "oracles.hpp"

#include <set>

using namespace graphixs;

namespace {

// M non-holdout cameras plus one holdout, K frames each at k/fps.
DatasetManifest grid_manifest(int n_train_cams, int n_frames, double fps = 30.0) {
    DatasetManifest m;
    m.nominal_fps = fps;
    m.duration = n_frames / fps;
    for (int i = 0; i <= n_train_cams; ++i) {
        CameraModel cam = oracles::lookat_camera(i, Vec3(0, 3, 1), 8, i == 0);
        cam.fps = fps;
        m.cameras.push_back(cam);
    }
    for (const auto& cam : m.cameras)
        for (int k = 0; k < n_frames; ++k) {
            FrameObservation f;
            f.camera_id = cam.id;
            f.timestamp = k / fps;
            f.image_path = "img.ppm";
            m.frames.push_back(f);
        }
    m.sort_frames();
    return m;
}

std::set<int> camera_ids(const DatasetManifest& m) {
    std::set<int> ids;
    for (const auto& cam : m.cameras) ids.insert(cam.id);
    return ids;
}

} // namespace

TEST_CASE("drop_cameras removes the right count and spares the holdout") {
    const DatasetManifest m = grid_manifest(10, 6);

    SUBCASE("fraction zero is the identity") {
        const DatasetManifest out = drop_cameras(m, 0.0, 1);
        CHECK(out.cameras.size() == m.cameras.size());
        CHECK(out.frames.size() == m.frames.size());
    }

    SUBCASE("half of ten training cameras leaves five plus the holdout") {
        const DatasetManifest out = drop_cameras(m, 0.5, 1);
        CHECK(out.cameras.size() == 6);
        CHECK_NOTHROW(out.holdout_camera());
        CHECK(validate_manifest(out).empty());
    }

    SUBCASE("seeded determinism") {
        const auto a = camera_ids(drop_cameras(m, 0.3, 42));
        const auto b = camera_ids(drop_cameras(m, 0.3, 42));
        CHECK(a == b);

        bool any_different = false;
        for (std::uint64_t s = 0; s < 10; ++s)
            if (camera_ids(drop_cameras(m, 0.3, 100 + s)) != a) any_different = true;
        CHECK(any_different);
    }

    SUBCASE("invalid fraction rejected") {
        CHECK_THROWS(drop_cameras(m, 1.0, 1));
        CHECK_THROWS(drop_cameras(m, -0.1, 1));
    }
}

TEST_CASE("downsample_fps keeps nearest-grid frames with earlier tie-break") {
    SUBCASE("30 to 10 keeps every third source frame") {
        const DatasetManifest m = grid_manifest(2, 9, 30.0);
        const DatasetManifest out = downsample_fps(m, 10.0);
        for (const auto& cam : out.cameras) {
            if (cam.is_holdout) continue;
            std::vector<double> times;
            for (const auto& f : out.frames)
                if (f.camera_id == cam.id) times.push_back(f.timestamp);
            REQUIRE(times.size() == 3);
            CHECK(times[0] == doctest::Approx(0.0 / 30.0));
            CHECK(times[1] == doctest::Approx(3.0 / 30.0));
            CHECK(times[2] == doctest::Approx(6.0 / 30.0));
        }
    }

    SUBCASE("30 to 30 is the identity on frame sets") {
        const DatasetManifest m = grid_manifest(2, 6, 30.0);
        const DatasetManifest out = downsample_fps(m, 30.0);
        CHECK(out.frames.size() == m.frames.size());
    }

    SUBCASE("30 to 20 over six frames keeps indices 0,1,3,4 per the tie rule") {
        const DatasetManifest m = grid_manifest(1, 6, 30.0);
        const DatasetManifest out = downsample_fps(m, 20.0);
        std::vector<int> kept;
        for (const auto& f : out.frames) {
            const CameraModel* cam = out.find_camera(f.camera_id);
            if (cam->is_holdout) continue;
            kept.push_back(static_cast<int>(std::lround(f.timestamp * 30.0)));
        }
        CHECK(kept == std::vector<int>{0, 1, 3, 4});
    }

    SUBCASE("idempotence: downsampling twice equals once") {
        const DatasetManifest m = grid_manifest(3, 12, 30.0);
        const DatasetManifest once = downsample_fps(m, 20.0);
        const DatasetManifest twice = downsample_fps(once, 20.0);
        REQUIRE(once.frames.size() == twice.frames.size());
        for (std::size_t i = 0; i < once.frames.size(); ++i)
            CHECK(once.frames[i].timestamp == twice.frames[i].timestamp);
    }

    SUBCASE("camera fps field is updated") {
        const DatasetManifest m = grid_manifest(2, 6, 30.0);
        const DatasetManifest out = downsample_fps(m, 10.0);
        for (const auto& cam : out.cameras)
            if (!cam.is_holdout) CHECK(cam.fps == 10.0);
    }

    SUBCASE("invalid target rejected") {
        const DatasetManifest m = grid_manifest(2, 6, 30.0);
        CHECK_THROWS(downsample_fps(m, 0.0));
        CHECK_THROWS(downsample_fps(m, 60.0));
    }
}

TEST_CASE("unsync_cameras downsamples exactly the selected subset") {
    const DatasetManifest m = grid_manifest(10, 6, 30.0);

    SUBCASE("fraction zero is the identity") {
        const DatasetManifest out = unsync_cameras(m, 0.0, 20.0, 1);
        CHECK(out.frames.size() == m.frames.size());
    }

    SUBCASE("half the training cameras end up at the target fps") {
        const DatasetManifest out = unsync_cameras(m, 0.5, 20.0, 7);
        int at_target = 0, untouched = 0;
        for (const auto& cam : out.cameras) {
            if (cam.is_holdout) continue;
            if (cam.fps == 20.0) ++at_target;
            if (cam.fps == 30.0) ++untouched;
        }
        CHECK(at_target == 5);
        CHECK(untouched == 5);
    }

    SUBCASE("untouched cameras keep identical frame lists") {
        const DatasetManifest out = unsync_cameras(m, 0.5, 20.0, 7);
        for (const auto& cam : out.cameras) {
            if (cam.is_holdout || cam.fps != 30.0) continue;
            std::vector<double> before, after;
            for (const auto& f : m.frames)
                if (f.camera_id == cam.id) before.push_back(f.timestamp);
            for (const auto& f : out.frames)
                if (f.camera_id == cam.id) after.push_back(f.timestamp);
            CHECK(before == after);
        }
    }
}

TEST_CASE("faulty_cameras hits its target sparsity bands") {
    const DatasetManifest m = grid_manifest(10, 30, 30.0);

    SUBCASE("target zero is the identity") {
        const DatasetManifest out = faulty_cameras(m, 0.0, 1);
        CHECK(out.frames.size() == m.frames.size());
    }

    SUBCASE("setting-1 target 13 percent") {
        const DatasetManifest out = faulty_cameras(m, 0.13, 5);
        const double s = realized_sparsity(out, m);
        CHECK(s >= 0.12);
        CHECK(s <= 0.14);
    }

    SUBCASE("setting-2 target 37 percent") {
        const DatasetManifest out = faulty_cameras(m, 0.37, 5);
        const double s = realized_sparsity(out, m);
        CHECK(s >= 0.36);
        CHECK(s <= 0.38);
    }

    SUBCASE("deterministic under seed") {
        const DatasetManifest a = faulty_cameras(m, 0.2, 9);
        const DatasetManifest b = faulty_cameras(m, 0.2, 9);
        REQUIRE(a.frames.size() == b.frames.size());
        for (std::size_t i = 0; i < a.frames.size(); ++i) {
            CHECK(a.frames[i].camera_id == b.frames[i].camera_id);
            CHECK(a.frames[i].timestamp == b.frames[i].timestamp);
        }
    }

    SUBCASE("holdout frames survive untouched") {
        const DatasetManifest out = faulty_cameras(m, 0.37, 3);
        const int holdout_id = m.holdout_camera().id;
        std::size_t before = 0, after = 0;
        for (const auto& f : m.frames)
            if (f.camera_id == holdout_id) ++before;
        for (const auto& f : out.frames)
            if (f.camera_id == holdout_id) ++after;
        CHECK(before == after);
    }
}

TEST_CASE("realized_sparsity counts training frames only") {
    const DatasetManifest m = grid_manifest(4, 6);

    CHECK(realized_sparsity(m, m) == doctest::Approx(0.0));

    SUBCASE("removing half the training frames reads 0.5") {
        DatasetManifest half = m;
        half.frames.clear();
        const int holdout_id = m.holdout_camera().id;
        int kept = 0;
        for (const auto& f : m.frames) {
            if (f.camera_id == holdout_id) {
                half.frames.push_back(f);
                continue;
            }
            if (kept % 2 == 0) half.frames.push_back(f);
            ++kept;
        }
        CHECK(realized_sparsity(half, m) == doctest::Approx(0.5));
    }

    SUBCASE("composite degradation matches a hand count") {
        // 4 training cameras x 6 frames = 24 training frames.
        // drop 25% of cameras -> 3 cameras x 6 = 18 frames.
        // then 30 -> 20 fps keeps 4 of 6 frames per camera -> 12 frames.
        // sparsity = 1 - 12/24 = 0.5
        const DatasetManifest dropped = drop_cameras(m, 0.25, 11);
        const DatasetManifest degraded = downsample_fps(dropped, 20.0);
        CHECK(realized_sparsity(degraded, m) == doctest::Approx(1.0 - 12.0 / 24.0));
        CHECK(degraded.degradation_chain.size() == 2);
    }

    SUBCASE("frames absent from the reference are rejected") {
        DatasetManifest extra = m;
        FrameObservation f;
        f.camera_id = 1;
        f.timestamp = 0.987;
        extra.frames.push_back(f);
        extra.sort_frames();
        CHECK_THROWS(realized_sparsity(extra, m));
    }
}

TEST_CASE("every degradation output is a valid manifest") {
    const DatasetManifest m = grid_manifest(6, 12);
    CHECK(validate_manifest(drop_cameras(m, 0.3, 1)).empty());
    CHECK(validate_manifest(downsample_fps(m, 10.0)).empty());
    CHECK(validate_manifest(unsync_cameras(m, 0.5, 20.0, 2)).empty());
    CHECK(validate_manifest(faulty_cameras(m, 0.2, 3)).empty());
}

TEST_CASE("degradation spec round-trips through its string form") {
    DegradationSpec spec;
    spec.kind = DegradationKind::Faulty;
    spec.target_sparsity = 0.37;
    spec.seed = 123;
    const DegradationSpec parsed = degradation_from_string(spec.to_string());
    CHECK(parsed.kind == spec.kind);
    CHECK(parsed.target_sparsity == doctest::Approx(spec.target_sparsity));
    CHECK(parsed.seed == spec.seed);
}
