#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>

#include "sobrem/runconfig.hpp"
#include "sobrem/serialize.hpp"

using namespace sobrem;

namespace {

RunConfig parse(const char* text) { return run_config_from_json(Json::parse(text)); }

}  // namespace

TEST(Serialize, RationalForms) {
  EXPECT_EQ(Json::parse(R"("1/3")").get<Rational>(), Rational(1, 3));
  EXPECT_EQ(Json::parse("7").get<Rational>(), Rational(7));
  EXPECT_EQ(Json::parse("0.125").get<Rational>(), Rational(1, 8));
  EXPECT_EQ(Json(Rational(-2, 6)).dump(), R"("-1/3")");
  EXPECT_THROW(Json::parse("[1]").get<Rational>(), ConfigError);
}

TEST(Serialize, EverySetKindRoundTrips) {
  const std::vector<SetSpec> specs{
      SetSpec{CantorFactor{Rational(1, 3), 4, Rational(0), Rational(1)}},
      SetSpec{FatCantorFactor{Rational(1, 4), 6}},
      SetSpec{ProductSpec{{CantorFactor{Rational(1, 3), 2}, PointFactor{Rational(1, 2)}, IntervalFactor{}}}},
      SetSpec{SegmentSpec{{Rational(0), Rational(1, 7)}, {Rational(1), Rational(2, 7)}}},
      SetSpec{DiskSpec{{0.25, 0.5}, 0.125}},
      SetSpec{ArcSpec{{0.5, 0.5}, 0.25, 0.1, 2.5}},
      SetSpec{JuliaSpec{{-0.12, 0.75}, 3.0, 200}},
      SetSpec{CarpetSpec{3, Rational(0), Rational(1)}},
      SetSpec{BitmapSpec{"k.pgm"}},
      SetSpec{UnionSpec{{SetSpec{DiskSpec{{0.2, 0.2}, 0.1}}, SetSpec{CarpetSpec{1}}}}},
  };
  for (const auto& s : specs) {
    const Json j = s;
    const SetSpec back = j.get<SetSpec>();
    EXPECT_EQ(back.kind(), s.kind());
    EXPECT_EQ(Json(back), j) << j.dump();
  }
}

TEST(Serialize, SetErrors) {
  EXPECT_THROW(Json::parse(R"({"kind": "blob"})").get<SetSpec>(), ConfigError);
  EXPECT_THROW(Json::parse(R"({"kind": "disk", "center": [0.5], "radius": 0.1, "colour": 1})").get<SetSpec>(),
               ConfigError);
  EXPECT_THROW(Json::parse(R"({"kind": "product", "factors": [{"type": "wedge"}]})").get<SetSpec>(), ConfigError);
  EXPECT_THROW(Json::parse(R"({"radius": 1})").get<SetSpec>(), ConfigError);
}

TEST(Serialize, GeometryRoundTrip) {
  const GridGeometry g({Rational(-1, 3), Rational(0)}, {Rational(4, 3), Rational(1)}, Rational(1, 81));
  EXPECT_EQ(geometry_from_json(geometry_json(g)), g);
}

TEST(RunConfigJson, FullRoundTrip) {
  RunConfig c;
  c.command = "classify";
  c.set = SetSpec{CantorFactor{Rational(1, 3), 5}};
  c.geometry = GridGeometry({Rational(0)}, {Rational(1)}, Rational(1, 243));
  c.p = 1.5;
  c.levels = 3;
  c.bracket = true;
  c.capacity.init = CapacityInit::Half;
  c.capacity.kkt_tol = 1e-7;
  c.scales = {Rational(1, 3), Rational(1, 9)};
  c.scan.length_tol = 0.01;
  c.scan.n_lines = 512;
  c.directions = {{1.0}};
  c.acl.function = "sin";
  c.acl.decompose.cutoff_c = 5.0;
  c.acl.weak.field = "jump";
  c.verdict.measure_retention = 0.9;
  c.verdict.capacity = false;
  const Json j = run_config_json(c);
  EXPECT_EQ(run_config_json(run_config_from_json(j)), j);
}

TEST(RunConfigJson, PartialGeometryUsesDefaults) {
  const RunConfig c = parse(R"({"set": {"kind": "cantor", "depth": 3}, "geometry": {"h": "1/81"}})");
  ASSERT_TRUE(c.geometry);
  EXPECT_EQ(c.geometry->h(), Rational(1, 81));
  EXPECT_EQ(c.geometry->lo(0), Rational(-21, 81));
  EXPECT_EQ(c.geometry->hi(0), Rational(102, 81));
  EXPECT_THROW(parse(R"({"geometry": {"h": "1/8"}})"), ConfigError);
}

TEST(RunConfigJson, UnknownKeysAndBadTypes) {
  EXPECT_THROW(parse(R"({"pee": 2})"), ConfigError);
  EXPECT_THROW(parse(R"({"p": "two"})"), ConfigError);
  EXPECT_THROW(parse(R"({"acl": {"depth": 3, "wiggle": 1}})"), ConfigError);
  EXPECT_THROW(parse(R"({"capacity": {"init": "random"}})"), ConfigError);
}

TEST(Overrides, KeysPathsAndKinds) {
  Json doc = Json::object();
  apply_override(doc, "disk");
  apply_override(doc, "radius=0.25");
  apply_override(doc, "center=[0.5,0.5]");
  apply_override(doc, "capacity.init=indicator");
  apply_override(doc, "geometry.h=1/32");
  apply_override(doc, "p=3");
  EXPECT_EQ(doc["set"]["kind"], "disk");
  EXPECT_EQ(doc["set"]["radius"], 0.25);
  EXPECT_EQ(doc["capacity"]["init"], "indicator");
  EXPECT_EQ(doc["geometry"]["h"], "1/32");
  EXPECT_EQ(doc["p"], 3);
  apply_override(doc, "disk");  // same kind keeps the fields
  EXPECT_EQ(doc["set"]["radius"], 0.25);
  apply_override(doc, "carpet");
  EXPECT_FALSE(doc["set"].contains("radius"));
  EXPECT_THROW(apply_override(doc, "=3"), ConfigError);
  EXPECT_THROW(apply_override(doc, "p.x=3"), ConfigError);
  EXPECT_THROW(apply_override(doc, ""), ConfigError);
}

TEST(Overrides, LoadOrderAndFinalize) {
  ::setenv("SOBREM_OUT_DIR", "/tmp/sobrem-out", 1);
  const RunConfig a = load_run_config(std::nullopt, "gen", {"depth=4", "cantor"});
  const RunConfig b = load_run_config(std::nullopt, "gen", {"cantor", "depth=4"});
  EXPECT_EQ(run_config_json(a), run_config_json(b));
  EXPECT_EQ(a.out_dir, "/tmp/sobrem-out");
  EXPECT_EQ(a.prefix, "gen");
  ASSERT_TRUE(a.geometry);
  EXPECT_EQ(a.geometry->h(), Rational(1, 64));
  EXPECT_EQ(a.geometry->lo(0), Rational(-1, 4));
  ::unsetenv("SOBREM_OUT_DIR");
  EXPECT_EQ(load_run_config(std::nullopt, "gen", {"cantor"}).out_dir, ".");
  EXPECT_THROW(load_run_config(std::nullopt, "cap", {"disk", "p=1"}), ConfigError);
  EXPECT_THROW(load_run_config(std::nullopt, "cap", {"disk", "jobs=-2"}), ConfigError);
  EXPECT_THROW(load_run_config(std::string("/nonexistent.json"), "cap", {}), IoError);
}

TEST(Overrides, ConfigFileThenOverrides) {
  const auto path = (std::filesystem::temp_directory_path() / "sobrem_serialize_test.json").string();
  write_file(path, R"({"set": {"kind": "disk", "center": [0.5, 0.5], "radius": 0.25}, "p": 3})");
  const RunConfig c = load_run_config(path, "cap", {"radius=0.3"});
  EXPECT_EQ(c.p, 3.0);
  EXPECT_EQ(std::get<DiskSpec>(c.set->v).radius, 0.3);
  write_file(path, "[1, 2]");
  EXPECT_THROW(load_run_config(path, "cap", {}), ConfigError);
  write_file(path, "{");
  EXPECT_THROW(load_run_config(path, "cap", {}), ConfigError);
  std::filesystem::remove(path);
}

TEST(Reports, VerdictJsonCarriesEvidence) {
  const GridGeometry g({Rational(0), Rational(-1, 2)}, {Rational(1), Rational(1, 2)}, Rational(1, 81));
  VerdictConfig vc;
  vc.capacity = false;
  const Verdict v = classify(SetSpec{ProductSpec{{CantorFactor{Rational(1, 3), 4}, PointFactor{}}}}, g, 2.0, vc);
  const Json j = v;
  EXPECT_EQ(j["label"], "REMOVABLE_SUFFICIENT");
  EXPECT_TRUE(j["evidence"]["capacity"].is_null());
  EXPECT_EQ(j["evidence"]["dimension"]["backend"], "exact");
  EXPECT_FALSE(j["evidence"]["sufficient"]["directions"][0]["fine"].contains("per_line"));
  EXPECT_EQ(j["config_echo"]["verdict"]["capacity"], false);
}
