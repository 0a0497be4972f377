#include <gtest/gtest.h>

#include <algorithm>

#include "fwc/rng.hpp"
#include "fwc/stm.hpp"
#include "oracles.hpp"

using namespace fwc;

namespace {

const std::vector<std::string> kS2Bands = {"Blue", "Green",    "Red",  "RedEdge1", "RedEdge2",
                                           "RedEdge3", "NIR", "NIRn", "SWIR1",    "SWIR2"};

Raster<float> constant_s2(const GridGeometry& geom, float fill) {
    Raster<float> g(geom, static_cast<int64_t>(kS2Bands.size()), kS2Bands, fill);
    return g;
}

Raster<float> random_s2(Rng& rng, const GridGeometry& geom, double invalid_rate) {
    Raster<float> g(geom, static_cast<int64_t>(kS2Bands.size()), kS2Bands);
    for (auto& v : g.values) v = static_cast<float>(rng.uniform(0.01, 0.9));
    for (int64_t c = 0; c < geom.n_cells(); ++c)
        if (rng.uniform() < invalid_rate) g.set_invalid(c / geom.n_cols, c % geom.n_cols);
    return g;
}

DatedStack six_date_stack(Rng& rng, const GridGeometry& geom) {
    DatedStack stack;
    const char* dates[] = {"2023-01-15", "2023-02-10", "2023-06-20",
                           "2023-07-12", "2023-08-05", "2023-12-20"};
    for (const char* d : dates) {
        stack.dates.push_back(Date::parse(d));
        stack.grids.push_back(random_s2(rng, geom, 0.15));
    }
    return stack;
}

} // namespace

TEST(Dates, ParseAndSeasonMembership) {
    const Date d = Date::parse("2023-08-15");
    EXPECT_EQ(d.year, 2023);
    EXPECT_EQ(d.month, 8);
    EXPECT_EQ(d.day, 15);
    EXPECT_THROW(Date::parse("2023/08/15"), DataError);
    EXPECT_THROW(Date::parse("2023-13-01"), DataError);

    const auto dry = default_dry_season();
    const auto wet = default_wet_season();
    EXPECT_TRUE(dry.contains(Date::parse("2023-06-01")));
    EXPECT_TRUE(dry.contains(Date::parse("2023-08-31")));
    EXPECT_FALSE(dry.contains(Date::parse("2023-09-01")));
    EXPECT_TRUE(wet.contains(Date::parse("2023-12-01"))); // wraps the year boundary
    EXPECT_TRUE(wet.contains(Date::parse("2024-03-31")));
    EXPECT_FALSE(wet.contains(Date::parse("2024-04-01")));
}

TEST(ComputeIndex, FormulaSpotValues) {
    GridGeometry geom{0.0, 0.0, 1.0, 1.0, 1, 3};
    Raster<float> g(geom, 3, {"Red", "NIR", "Blue"});
    // cell 0: NIR = Red; cell 1: NIR 0.5, Red 0.25; cell 2 same with Blue 0.1
    g.values = {0.3f, 0.25f, 0.25f,   // Red
                0.3f, 0.5f,  0.5f,    // NIR
                0.0f, 0.0f,  0.1f};   // Blue

    const auto ndvi = compute_index(g, SpectralIndex::NDVI);
    EXPECT_NEAR(ndvi.at(0, 0, 0), 0.0, 1e-7);
    EXPECT_NEAR(ndvi.at(0, 0, 1), 1.0 / 3.0, 1e-7);

    const auto savi = compute_index(g, SpectralIndex::SAVI);
    EXPECT_NEAR(savi.at(0, 0, 1), 0.3, 1e-7);

    const auto evi = compute_index(g, SpectralIndex::EVI);
    EXPECT_NEAR(evi.at(0, 0, 2), 0.625 / 2.25, 1e-6);
}

TEST(ComputeIndex, MissingBandErrors) {
    GridGeometry geom{0.0, 0.0, 1.0, 1.0, 1, 1};
    Raster<float> g(geom, 2, {"Red", "NIR"});
    g.values = {0.2f, 0.4f};
    EXPECT_NO_THROW(compute_index(g, SpectralIndex::NDVI));
    EXPECT_THROW(compute_index(g, SpectralIndex::EVI), DataError); // no Blue band
    Raster<float> g2(geom, 1, {"Red"});
    g2.values = {0.2f};
    EXPECT_THROW(compute_index(g2, SpectralIndex::NDVI), DataError);
}

TEST(ComputeIndex, NearZeroDenominatorInvalidatesCell) {
    GridGeometry geom{0.0, 0.0, 1.0, 1.0, 1, 2};
    Raster<float> g(geom, 2, {"Red", "NIR"});
    g.values = {0.0f, 0.3f, 0.0f, 0.3f}; // cell 0 has Red = NIR = 0
    const auto ndvi = compute_index(g, SpectralIndex::NDVI);
    EXPECT_FALSE(ndvi.valid(0, 0));
    EXPECT_TRUE(ndvi.valid(0, 1));
}

TEST(Percentile, SpotValuesAndDefinition) {
    EXPECT_DOUBLE_EQ(percentile({4, 4, 4, 4}, 37.0), 4.0);
    EXPECT_DOUBLE_EQ(percentile({1, 2, 3, 4}, 50.0), 2.5);
    EXPECT_DOUBLE_EQ(percentile({1, 2, 3, 4}, 10.0), 1.3); // h = 0.3
    EXPECT_DOUBLE_EQ(percentile({5}, 90.0), 5.0);
    EXPECT_THROW(percentile({}, 50.0), DataError);
}

TEST(Percentile, MatchesIndependentOracleOnRandomLists) {
    Rng rng(33);
    for (int trial = 0; trial < 300; ++trial) {
        const size_t n = 1 + rng.bounded(40);
        std::vector<double> values(n);
        for (auto& v : values) v = rng.uniform(-100, 100);
        const double p = rng.uniform(0, 100);
        EXPECT_NEAR(percentile(values, p), oracle::percentile(values, p), 1e-12);
    }
}

TEST(ComputeStm, ConstantSeasonReproducesGridValues) {
    GridGeometry geom{0.0, 0.0, 10.0, 10.0, 3, 3};
    DatedStack stack;
    for (const char* d : {"2023-06-10", "2023-07-10", "2023-08-10"}) {
        stack.dates.push_back(Date::parse(d));
        stack.grids.push_back(constant_s2(geom, 0.4f));
    }
    const auto cube = compute_stm(stack, {default_dry_season()});
    EXPECT_EQ(cube.n_bands, 13 * 5);
    for (int64_t b = 0; b < cube.n_bands; ++b) {
        const std::string& name = cube.band_names[static_cast<size_t>(b)];
        const bool is_index = name.rfind("NDVI", 0) == 0 || name.rfind("EVI", 0) == 0 ||
                              name.rfind("SAVI", 0) == 0;
        for (int64_t c = 0; c < cube.n_cells(); ++c) {
            if (is_index) continue; // index value of a flat 0.4 spectrum, checked elsewhere
            EXPECT_FLOAT_EQ(cube.values[static_cast<size_t>(b * cube.n_cells() + c)], 0.4f);
        }
    }
}

TEST(ComputeStm, TwoSeasonBandCountAndNaming) {
    GridGeometry geom{0.0, 0.0, 10.0, 10.0, 2, 2};
    Rng rng(4);
    DatedStack stack;
    for (const char* d : {"2023-01-10", "2023-02-10", "2023-03-10", "2023-06-10", "2023-07-10", "2023-08-10"}) {
        stack.dates.push_back(Date::parse(d));
        stack.grids.push_back(random_s2(rng, geom, 0.0));
    }
    const auto cube = compute_stm(stack, {default_dry_season(), default_wet_season()});
    EXPECT_EQ(cube.n_bands, 130); // (10 + 3) x 5 x 2
    EXPECT_NE(cube.band_index("Red_p50_dry"), -1);
    EXPECT_NE(cube.band_index("NDVI_p90_wet"), -1);
    EXPECT_NE(cube.band_index("SWIR2_p10_dry"), -1);
}

TEST(ComputeStm, MatchesPerCellOracleOnRandomStacks) {
    Rng rng(91);
    GridGeometry geom{0.0, 0.0, 10.0, 10.0, 6, 7};
    const std::vector<SeasonWindow> seasons = {default_dry_season(), default_wet_season()};
    StmOptions opt;

    for (int trial = 0; trial < 6; ++trial) {
        const DatedStack stack = six_date_stack(rng, geom);
        // verify at computation precision; the f32 raster is the same values
        // cast band-for-band, checked at the end
        const auto cube = compute_stm_as<double>(stack, seasons, opt);

        const int64_t cells = geom.n_cells();
        for (int64_t cell = 0; cell < cells; ++cell) {
            // oracle: gather per (season, variable) and recompute
            bool expect_valid = true;
            std::vector<double> expected;
            for (const auto& season : seasons) {
                for (size_t v = 0; v < 13; ++v) {
                    std::vector<double> obs;
                    for (size_t d = 0; d < stack.size(); ++d) {
                        if (!season.contains(stack.dates[d])) continue;
                        const auto& grid = stack.grids[d];
                        if (v < 10) {
                            if (!grid.valid_mask[static_cast<size_t>(cell)]) continue;
                            obs.push_back(grid.values[v * static_cast<size_t>(cells) +
                                                      static_cast<size_t>(cell)]);
                        } else {
                            const auto idx = compute_index(
                                grid, v == 10 ? SpectralIndex::NDVI
                                              : v == 11 ? SpectralIndex::EVI : SpectralIndex::SAVI);
                            if (!idx.valid_mask[static_cast<size_t>(cell)]) continue;
                            obs.push_back(idx.values[static_cast<size_t>(cell)]);
                        }
                    }
                    if (obs.size() < static_cast<size_t>(opt.min_obs)) expect_valid = false;
                    if (expect_valid)
                        for (const double p : opt.percentiles)
                            expected.push_back(oracle::percentile(obs, p));
                }
            }
            ASSERT_EQ(cube.valid_mask[static_cast<size_t>(cell)] != 0, expect_valid);
            if (!expect_valid) continue;
            for (size_t b = 0; b < expected.size(); ++b)
                EXPECT_NEAR(cube.values[b * static_cast<size_t>(cells) + static_cast<size_t>(cell)],
                            expected[b], 1e-9);
        }

        // the stored f32 cube is exactly the double cube, cast
        const auto cube32 = compute_stm(stack, seasons, opt);
        ASSERT_EQ(cube32.valid_mask, cube.valid_mask);
        for (size_t i = 0; i < cube.values.size(); ++i)
            ASSERT_EQ(cube32.values[i], static_cast<float>(cube.values[i]));
    }
}

TEST(ComputeStm, InvariantToDatePermutation) {
    Rng rng(55);
    GridGeometry geom{0.0, 0.0, 10.0, 10.0, 5, 5};
    const DatedStack stack = six_date_stack(rng, geom);
    const auto cube = compute_stm(stack, {default_dry_season(), default_wet_season()});

    DatedStack shuffled;
    const std::vector<size_t> order = {4, 0, 5, 2, 1, 3};
    for (const size_t i : order) {
        shuffled.dates.push_back(stack.dates[i]);
        shuffled.grids.push_back(stack.grids[i]);
    }
    const auto cube2 = compute_stm(shuffled, {default_dry_season(), default_wet_season()});
    EXPECT_EQ(cube, cube2);
}

TEST(ComputeStm, FullyMaskedDuplicateDateHasNoEffect) {
    Rng rng(66);
    GridGeometry geom{0.0, 0.0, 10.0, 10.0, 4, 4};
    DatedStack stack = six_date_stack(rng, geom);
    const auto cube = compute_stm(stack, {default_dry_season()});

    Raster<float> masked = stack.grids[3];
    for (int64_t c = 0; c < masked.n_cells(); ++c) masked.set_invalid(c / 4, c % 4);
    stack.dates.push_back(stack.dates[3]);
    stack.grids.push_back(masked);
    const auto cube2 = compute_stm(stack, {default_dry_season()});
    EXPECT_EQ(cube, cube2);
}

TEST(ComputeStm, MaskedObservationsNeverInfluenceOutputs) {
    Rng rng(13);
    GridGeometry geom{0.0, 0.0, 10.0, 10.0, 4, 4};
    DatedStack stack = six_date_stack(rng, geom);
    const auto cube = compute_stm(stack, {default_dry_season(), default_wet_season()});

    // make the sentinel itself an extreme value, so any leak of masked cells
    // into the gather would move the percentiles by orders of magnitude
    DatedStack poisoned = stack;
    for (auto& grid : poisoned.grids) {
        grid.nodata = 1e30f;
        grid.burn_nodata();
    }
    const auto cube2 = compute_stm(poisoned, {default_dry_season(), default_wet_season()});
    EXPECT_EQ(cube.values, cube2.values);
    EXPECT_EQ(cube.valid_mask, cube2.valid_mask);
}

TEST(ComputeStm, PercentileBandsAreMonotone) {
    Rng rng(21);
    GridGeometry geom{0.0, 0.0, 10.0, 10.0, 5, 6};
    const DatedStack stack = six_date_stack(rng, geom);
    const auto cube = compute_stm(stack, {default_dry_season(), default_wet_season()});
    const int64_t cells = cube.n_cells();
    for (int64_t group = 0; group < cube.n_bands / 5; ++group) {
        for (int64_t c = 0; c < cells; ++c) {
            if (!cube.valid_mask[static_cast<size_t>(c)]) continue;
            for (int64_t p = 1; p < 5; ++p) {
                const float lo = cube.values[static_cast<size_t>((group * 5 + p - 1) * cells + c)];
                const float hi = cube.values[static_cast<size_t>((group * 5 + p) * cells + c)];
                EXPECT_LE(lo, hi);
            }
        }
    }
}

TEST(ComputeStm, EmptySeasonWindowErrors) {
    Rng rng(1);
    GridGeometry geom{0.0, 0.0, 10.0, 10.0, 2, 2};
    DatedStack stack;
    stack.dates.push_back(Date::parse("2023-06-15"));
    stack.grids.push_back(random_s2(rng, geom, 0.0));
    SeasonWindow never{"april", 4, 1, 4, 30};
    try {
        compute_stm(stack, {never});
        FAIL() << "expected DataError";
    } catch (const DataError& e) {
        EXPECT_NE(std::string(e.what()).find("april"), std::string::npos);
    }
}

TEST(ComputeStm, WorkerCountDoesNotChangeOutput) {
    Rng rng(14);
    GridGeometry geom{0.0, 0.0, 10.0, 10.0, 9, 5};
    const DatedStack stack = six_date_stack(rng, geom);
    StmOptions serial, parallel;
    serial.workers = 1;
    parallel.workers = 7;
    const auto a = compute_stm(stack, {default_dry_season(), default_wet_season()}, serial);
    const auto b = compute_stm(stack, {default_dry_season(), default_wet_season()}, parallel);
    EXPECT_EQ(a, b);
}

TEST(DatedStack, ManifestRoundTrip) {
    Rng rng(8);
    GridGeometry geom{0.0, 0.0, 10.0, 10.0, 3, 3};
    DatedStack stack;
    for (const char* d : {"2023-06-10", "2023-07-10"}) {
        stack.dates.push_back(Date::parse(d));
        stack.grids.push_back(random_s2(rng, geom, 0.1));
    }
    const auto dir = std::filesystem::temp_directory_path() / "fwc_test_stm";
    std::filesystem::create_directories(dir);
    const auto manifest = (dir / "stack.json").string();
    save_stack(stack, manifest, "date");
    const auto loaded = load_stack(manifest);
    ASSERT_EQ(loaded.size(), stack.size());
    for (size_t i = 0; i < stack.size(); ++i) {
        EXPECT_EQ(loaded.dates[i], stack.dates[i]);
        EXPECT_EQ(loaded.grids[i], stack.grids[i]);
    }
    // out-of-order manifests are rejected
    DatedStack bad = stack;
    std::swap(bad.dates[0], bad.dates[1]);
    EXPECT_THROW(bad.validate_ordered(), DataError);
}
