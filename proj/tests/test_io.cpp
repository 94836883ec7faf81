#include <cmath>
#include <filesystem>

#include <gtest/gtest.h>

#include "kenergy/io.hpp"

using namespace kenergy;

TEST(Format, RoundTripDecimal) {
    for (double x : {0.1, 1.0 / 3.0, -2.5e-300, 123456789.123456789}) EXPECT_EQ(std::stod(format_double(x)), x);
    EXPECT_EQ(format_double(-0.0), "0");
    EXPECT_EQ(format_double(INFINITY), "inf");
    EXPECT_EQ(format_double(NAN), "nan");
    EXPECT_TRUE(number_or_null(INFINITY).is_null());
    EXPECT_EQ(number_or_null(2.0).get<double>(), 2.0);
}

TEST(Records, GridRoundTrip) {
    auto f = sample_fubini_study_potential({-3, 3}, 32);
    auto j = to_json(f);
    EXPECT_EQ(j["dim"], 1);
    EXPECT_EQ(j["grid_size"], 32);
    auto g = grid_from_json(json::parse(j.dump()));
    EXPECT_EQ(g.data(), f.data());
    ASSERT_TRUE(g.tails().has_value());
    EXPECT_EQ(g.tails()->right, 1.0);
    auto compact = grid_from_json(to_json(sample_fubini_study_symbol(8)));
    EXPECT_FALSE(compact.tails().has_value());
}

TEST(Records, Grid2DRoundTrip) {
    auto f = GridFunction2D::sample({0, 1}, {0, 2}, 3, 5, [](double a, double b) { return a * a + b; });
    auto g = grid2d_from_json(json::parse(to_json(f).dump()));
    EXPECT_EQ(g.cells1(), 3u);
    EXPECT_EQ(g.cells2(), 5u);
    EXPECT_EQ(g.data(), f.data());
}

TEST(Records, PiecewiseAffineRoundTrip) {
    auto k = PiecewiseAffine1D::kink({0, 1}, 1.0, 0.25) + PiecewiseAffine1D::kink({0, 1}, -1.0, -0.75);
    auto back = pwa_from_json(json::parse(to_json(k).dump()));
    EXPECT_EQ(back.breakpoints(), k.breakpoints());
    EXPECT_EQ(back.slopes(), k.slopes());
    EXPECT_EQ(back.value_at_lo(), k.value_at_lo());
}

TEST(Records, MaxAffineRoundTrip) {
    auto k = MaxAffine2D::kink(Polytope::named("unit-triangle"), {1, 1}, 0.5);
    auto back = max_affine_from_json(json::parse(to_json(k).dump()));
    EXPECT_DOUBLE_EQ(back.integral(), k.integral());
    EXPECT_EQ(back.domain(), k.domain());
}

TEST(Records, PolytopeForms) {
    EXPECT_EQ(polytope_from_json(json("unit-square")), Polytope::named("unit-square"));
    EXPECT_EQ(polytope_from_json(json{{"interval", {-1, 1}}}), Polytope::named("symmetric-interval"));
    auto tri = polytope_from_json(json{{"vertices", {{0, 0}, {1, 0}, {0, 1}}}});
    EXPECT_DOUBLE_EQ(tri.volume(), 0.5);
    EXPECT_THROW(polytope_from_json(json{{"sphere", 1}}), ConfigError);
}

TEST(Records, DispatchByKeys) {
    EXPECT_TRUE(std::holds_alternative<GridFunction>(function_from_json(to_json(sample_fubini_study_symbol(4)))));
    EXPECT_TRUE(std::holds_alternative<PiecewiseAffine1D>(function_from_json(to_json(equator_kink()))));
    auto sq = MaxAffine2D::kink(Polytope::named("unit-square"), {1, 0}, 0.5);
    EXPECT_TRUE(std::holds_alternative<MaxAffine2D>(function_from_json(to_json(sq))));
    EXPECT_THROW(function_from_json(json{{"dim", 3}}), ConfigError);
    EXPECT_THROW(function_from_json(json::array()), ConfigError);
}

TEST(Records, MalformedInputs) {
    EXPECT_THROW(grid_from_json(json{{"dim", 1}, {"domain", {0, 1}}}), ConfigError);
    EXPECT_THROW(grid_from_json(json{{"dim", 1}, {"domain", {0, 1}}, {"grid_size", 4}, {"values", {1, 2}}}), ConfigError);
    EXPECT_THROW(grid_from_json(json{{"dim", 1}, {"domain", {0, 1, 2}}, {"values", {1, 2}}}), ConfigError);
    EXPECT_THROW(grid_from_json(json{{"dim", 1}, {"domain", {0, 1}}, {"values", "abc"}}), ConfigError);
    EXPECT_THROW(pwa_from_json(json{{"domain", {0, 1}}, {"offset", 0}, {"breakpoints", {0.5}}, {"slopes", {1, 0}}}),
                 NonConvexInput);
}

TEST(Files, ReadAndWrite) {
    auto dir = std::filesystem::temp_directory_path() / "kenergy_io_test";
    std::filesystem::create_directories(dir);
    auto path = (dir / "f.json").string();
    write_text_file(path, to_json(equator_kink()).dump());
    auto j = read_json_file(path);
    EXPECT_EQ(j["breakpoints"][0], 0.5);
    write_text_file(path, "{not json");
    EXPECT_THROW(read_json_file(path), IoError);
    EXPECT_THROW(read_json_file((dir / "missing.json").string()), IoError);
    EXPECT_THROW(write_text_file((dir / "no" / "such" / "dir.json").string(), "x"), IoError);
    std::filesystem::remove_all(dir);
}

TEST(Files, BundledFixtureIsTheSymbol) {
    auto j = read_json_file(std::string(KENERGY_DATA_DIR) + "/u0_1024.json");
    auto u = grid_from_json(j);
    EXPECT_EQ(u.cells(), 1024u);
    EXPECT_LE(linf_distance(u, sample_fubini_study_symbol(1024)), 1e-15);
}

TEST(Reports, EnergyReportMarksInfinity) {
    auto r = mabuchi(GridFunction::sample({0, 1}, 64, [](double y) { return y; }), Polytope::interval(0, 1),
                     Convention::donaldson, {.primal = false});
    auto j = to_json(r);
    EXPECT_TRUE(j["entropy_dual"].is_null());
    EXPECT_TRUE(j["total"].is_null());
    EXPECT_EQ(j["finite"], false);
    EXPECT_EQ(j["convention"], "donaldson");
}

TEST(Reports, CertificateAndStability) {
    auto u0 = sample_fubini_study_symbol(256);
    auto c = certify_unique(u0, add_affine(u0, 1, 0), Polytope::interval(0, 1), Convention::donaldson);
    auto j = to_json(c);
    EXPECT_TRUE(j["failed_stage"].is_null());
    EXPECT_EQ(j["affine_conclusion"], true);
    GeneratorOptions small;
    small.random_sums = 2;
    auto s = to_json(stability_margin(Polytope::interval(0, 1), Convention::paper_lemma, small));
    EXPECT_TRUE(s["witness"].contains("breakpoints"));
    EXPECT_GT(s["delta_estimate"].get<double>(), 0.0);
}

TEST(Csv, HeaderCarriesConvention) {
    Csv csv(Convention::paper_lemma, {"t", "M"});
    csv.row({0.5, -1.25});
    EXPECT_EQ(csv.str(), "# convention: paper-lemma\nt,M\n0.5,-1.25\n");
    EXPECT_THROW(csv.row({1.0}), InvalidArgument);
}
