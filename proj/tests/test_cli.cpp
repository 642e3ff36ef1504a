#include <gtest/gtest.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <sys/wait.h>

#include "rfm/commands.hpp"

using namespace rfm;

namespace {

const std::string kScenes = RFM_SCENE_DIR;
const std::string kBinary = RFM_CLI_PATH;

Scene scene(const std::string& name) { return load_scene(read_file(kScenes + "/" + name)); }

struct Run {
  int code;
  std::string out;
};

Run run(const std::string& args) {
  const auto tmp = std::filesystem::temp_directory_path() / "rfm_cli_test_out.txt";
  const std::string cmd = kBinary + " " + args + " > " + tmp.string() + " 2>&1";
  int status = std::system(cmd.c_str());
  Run r{WIFEXITED(status) ? WEXITSTATUS(status) : -1, read_file(tmp.string())};
  std::filesystem::remove(tmp);
  return r;
}

std::size_t parse_offset(const std::string& text) {
  try {
    load_scene(text);
  } catch (const ParseError& e) {
    return e.offset();
  }
  ADD_FAILURE() << "no parse error for:\n" << text;
  return 0;
}

}  // namespace

TEST(Scene, LoadsEveryKind) {
  EXPECT_EQ(scene("skyscraper_points.scene").skyscraper->length(), 3u);
  EXPECT_EQ(scene("flat.scene").flat->rank(), 1u);
  EXPECT_EQ(scene("line_p1_q2.scene").subtorus->support.dim(), 1u);
  EXPECT_EQ(scene("section_lagrangian.scene").section.epsilon.size(), 2u);
  auto r = scene("relative_constant.scene");
  EXPECT_EQ(r.relative.k, 1u);
  EXPECT_EQ(r.relative.a[0].size(), 2u);
  EXPECT_EQ(scene("bundle_flat.scene").bundle.P.size(), 1u);
}

TEST(Scene, OmittedRelativeFieldsDefaultToZero) {
  auto sc = load_scene("[torus]\ng = 3\n[support]\nkind = relative\nk = 2\n");
  EXPECT_EQ(sc.relative.zeta.size(), 1u);
  EXPECT_EQ(sc.relative.chi.size(), 2u);
  EXPECT_EQ(sc.local.xi.size(), 1u);
  EXPECT_EQ(sc.local.alpha.size(), 2u);
}

TEST(Scene, ErrorOffsetsPointIntoTheFile) {
  // "x1 +" fails at its own offset 4
  const std::string head = "[torus]\ng = 2\n[support]\nkind = section\nepsilon = ";
  EXPECT_EQ(parse_offset(head + "x1 +, x2\n"), head.size() + 4);
  EXPECT_EQ(parse_offset(head + "x1, x3\n"), head.size() + 4);
  EXPECT_EQ(parse_offset("[torus]\ng = two\n"), 12u);
  EXPECT_EQ(parse_offset("[torus]\ng = 2\n[nonsense]\n"), 14u);
  EXPECT_EQ(parse_offset("g = 2\n"), 0u);
  EXPECT_EQ(parse_offset("[torus]\ng = 2\ng = 3\n"), 14u);
  EXPECT_EQ(parse_offset("[torus]\ng = 2\nbogus\n"), 14u);
  EXPECT_EQ(parse_offset("[torus]\ng = 1\n[support]\nkind = blob\n"), 31u);
  EXPECT_EQ(parse_offset("[torus]\ng = 2\nwhat = 1\n"), 14u);
}

TEST(Scene, KindDependentKeysAreRequired) {
  EXPECT_THROW(load_scene("[torus]\ng = 2\n[support]\nkind = skyscraper\n"), ParseError);
  EXPECT_THROW(load_scene("[torus]\ng = 2\n[support]\nkind = section\n"), ParseError);
  EXPECT_THROW(load_scene("[torus]\ng = 2\n[support]\nkind = relative\n"), ParseError);
  EXPECT_THROW(load_scene("[torus]\ng = 2\n[support]\nkind = skyscraper\npoints = 0\n"), ParseError);
  EXPECT_THROW(load_scene("[torus]\ng = 2\n[bundle]\nk = 1\n[support]\nkind = flat\n"), ParseError);
}

TEST(Scene, MathematicalProblemsArePreconditions) {
  EXPECT_THROW(load_scene("[torus]\ng = 2\nmetric = 1, 2; 2, 1\n[support]\nkind = flat\n[system]\nholonomy = 0, 0\n"),
               PreconditionError);
  EXPECT_THROW(load_scene("[torus]\ng = 2\n[support]\nkind = subtorus\nequations = 1, 1; 2, 2\noffset = 0, 0\n"),
               PreconditionError);
}

TEST(Commands, SkyscraperAtOriginIsTrivial) {
  auto r = cmd_transform(scene("skyscraper_origin.scene"));
  EXPECT_EQ(r.exit_code, kExitOk);
  EXPECT_TRUE(r.body["result"]["trivial"].get<bool>());
  EXPECT_EQ(r.body["result"]["rank"], 1);
}

TEST(Commands, LineTransformsToAnnihilatorLine) {
  auto r = cmd_transform(scene("line_p1_q2.scene"));
  const Json& res = r.body["result"];
  // direction (1, 2) of the line is the equation of the dual line
  EXPECT_EQ(res["equations"], Json::parse(R"([["1","2"]])"));
  EXPECT_EQ(res["holonomy"], Json::parse(R"(["1/3"])"));
  EXPECT_EQ(res["offset"], Json::parse(R"(["1/5"])"));
  EXPECT_TRUE(res["normal"].get<bool>());
  EXPECT_EQ(r.body["wit_index"], 1);
}

TEST(Commands, ChecksNameFailingConditions) {
  auto sec = cmd_check(scene("section_lagrangian.scene"));
  EXPECT_EQ(sec.exit_code, kExitOk);
  EXPECT_TRUE(sec.body["all_hold"].get<bool>());

  auto a = cmd_check(scene("relative_nonconstant_a.scene"));
  EXPECT_EQ(a.exit_code, kExitPrecondition);
  bool saw_c3 = false;
  for (const auto& c : a.body["conditions"])
    if (c["name"] == "C3") {
      saw_c3 = true;
      EXPECT_EQ(c["verdict"], "ProvenNonzero");
      EXPECT_EQ(c["proof"], "proven");
    }
  EXPECT_TRUE(saw_c3);

  auto d = cmd_check(scene("bundle_nonclosed.scene"));
  EXPECT_EQ(d.exit_code, kExitPrecondition);
  for (const auto& c : d.body["conditions"])
    if (c["name"] == "D2") EXPECT_EQ(c["verdict"], "ProvenNonzero");
}

TEST(Commands, NumericalVerdictsBecomeWarnings) {
  auto a = cmd_check(scene("relative_nonconstant_a.scene"));
  ASSERT_EQ(a.body["warnings"].size(), 1u);
  EXPECT_NE(a.body["warnings"][0].get<std::string>().find("C2: NumericallyZero"), std::string::npos);
}

TEST(Commands, RoundTripsAreIdentities) {
  for (const char* name : {"skyscraper_origin.scene", "skyscraper_points.scene", "flat.scene",
                           "line_p1_q2.scene", "subtorus_plane.scene", "section_lagrangian.scene",
                           "relative_constant.scene", "bundle_flat.scene"}) {
    auto r = cmd_roundtrip(scene(name));
    EXPECT_EQ(r.exit_code, kExitOk) << name << "\n" << render_text(r.body);
  }
}

TEST(Commands, RoundTripExtremes) {
  // k = 0: a single fibre; k = g: a section
  auto k0 = load_scene("[torus]\ng = 2\n[support]\nkind = relative\nk = 0\nzeta = 1/3, 1/2\n"
                       "[system]\nxi = 1/5, 0\n");
  EXPECT_EQ(cmd_roundtrip(k0).exit_code, kExitOk);
  auto kg = load_scene("[torus]\ng = 2\n[support]\nkind = relative\nk = 2\nchi = x1 + x2, x1 - 1/2\n");
  EXPECT_EQ(cmd_roundtrip(kg).exit_code, kExitOk);
}

TEST(Commands, SeededReplayIsDeterministic) {
  CommandOptions o;
  o.seed = 42;
  o.count = 5;
  auto a = cmd_roundtrip_seeded(o), b = cmd_roundtrip_seeded(o);
  EXPECT_EQ(a.body.dump(), b.body.dump());
  EXPECT_EQ(a.exit_code, kExitOk);
  EXPECT_EQ(a.body["passed"], 5);
  o.seed = 43;
  EXPECT_NE(cmd_roundtrip_seeded(o).body.dump(), a.body.dump());
}

TEST(Commands, CurvatureOfAsymmetricSection) {
  auto r = cmd_curvature(scene("section_asymmetric.scene"));
  const Json& v = r.body["hodge"]["verdicts"];
  EXPECT_EQ(v[0]["name"], "F20 == 0");
  EXPECT_EQ(v[0]["verdict"], "ProvenNonzero");
  auto ok = cmd_curvature(scene("section_lagrangian.scene"));
  EXPECT_EQ(ok.body["hodge"]["verdicts"][0]["verdict"], "ProvenZero");
  EXPECT_EQ(ok.body["hodge"]["verdicts"][2]["verdict"], "ProvenZero");
}

TEST(Commands, ErrorReportsCarryExitCodes) {
  EXPECT_EQ(error_report(ParseError("x", 3)).exit_code, kExitParse);
  EXPECT_EQ(error_report(PreconditionError("C1", "y")).exit_code, kExitPrecondition);
  EXPECT_EQ(error_report(PreconditionError("C1", "y")).body["error"]["condition"], "C1");
  EXPECT_EQ(error_report(Error("z")).exit_code, kExitParse);
}

TEST(Render, TextMirrorsJsonFields) {
  auto r = cmd_transform(scene("line_p1_q2.scene"));
  const std::string t = render_text(r.body);
  EXPECT_NE(t.find("equations: [1, 2]"), std::string::npos);
  EXPECT_NE(t.find("wit_index: 1"), std::string::npos);
  EXPECT_NE(t.find("warnings: []"), std::string::npos);
}

TEST(Binary, ExitCodes) {
  EXPECT_EQ(run("transform " + kScenes + "/skyscraper_origin.scene").code, 0);
  auto bad = run("transform " + kScenes + "/bad_expr.scene");
  EXPECT_EQ(bad.code, 1);
  EXPECT_NE(bad.out.find("offset: 53"), std::string::npos) << bad.out;
  auto pre = run("transform " + kScenes + "/section_asymmetric.scene");
  EXPECT_EQ(pre.code, 2);
  EXPECT_NE(pre.out.find("condition: C1"), std::string::npos) << pre.out;
  EXPECT_EQ(run("check " + kScenes + "/bundle_nonclosed.scene").code, 2);
  EXPECT_EQ(run("transform " + kScenes + "/missing.scene").code, 1);
  EXPECT_EQ(run("frobnicate").code, 1);
}

TEST(Binary, ReportsAreByteDeterministic) {
  for (const char* c : {"transform", "check", "roundtrip", "curvature"}) {
    const std::string args = std::string(c) + " --format json " + kScenes + "/relative_constant.scene";
    auto a = run(args), b = run(args);
    EXPECT_EQ(a.code, 0);
    EXPECT_EQ(a.out, b.out);
  }
  auto s1 = run("roundtrip --seed 7 --count 3"), s2 = run("roundtrip --seed 7 --count 3");
  EXPECT_EQ(s1.code, 0);
  EXPECT_EQ(s1.out, s2.out);
}

TEST(Binary, JsonOutputToFile) {
  const auto out = std::filesystem::temp_directory_path() / "rfm_cli_report.json";
  auto r = run("transform --format json -o " + out.string() + " " + kScenes + "/line_p1_q2.scene");
  EXPECT_EQ(r.code, 0);
  Json j = Json::parse(read_file(out.string()));
  EXPECT_EQ(j["wit_index"], 1);
  std::filesystem::remove(out);
}

TEST(Binary, FlagsReachTheSampler) {
  auto r = run("check --grid 5 --tol 1e-6 " + kScenes + "/relative_nonconstant_a.scene");
  EXPECT_NE(r.out.find("grid 5, tol 1e-06"), std::string::npos) << r.out;
}
