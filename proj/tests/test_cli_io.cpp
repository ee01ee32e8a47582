#include <catch_amalgamated.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <numbers>

#include <ufb/commands.hpp>

using namespace ufb;
using Catch::Approx;
namespace fs = std::filesystem;

namespace {
fs::path scratch(const std::string &name) {
  const auto dir = fs::temp_directory_path() / "ufb-test-cli-io" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path &p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

std::string message_of(const std::string &text) {
  try {
    config_from_text(text, "cfg.json");
  } catch (const ConfigError &e) {
    return e.what();
  }
  return "";
}

RunConfig small_disc() {
  auto c = config_from_text(R"({"name": "disc", "grid": {"h": 0.0625}})");
  c.verify.samples = 2000;
  return c;
}
} // namespace

TEST_CASE("config errors name the offending location") {
  const auto malformed = message_of("{\n \"grid\": {\"dim\": 2,\n  \"h\": }\n}");
  CHECK_THAT(malformed, Catch::Matchers::ContainsSubstring("cfg.json: line 3"));
  CHECK_THAT(message_of(R"({"grid": {"hh": 1}})"), Catch::Matchers::ContainsSubstring("grid.hh"));
  CHECK_THAT(message_of(R"({"operator": {"mode": "pucci-plus", "lambda": 2, "Lambda": 1}})"),
             Catch::Matchers::ContainsSubstring("operator"));
  CHECK_THAT(message_of(R"({"blowup": {"aperture": 0}})"), Catch::Matchers::ContainsSubstring("blowup.aperture"));
  CHECK_THAT(message_of(R"({"grid": {"h": "small"}})"), Catch::Matchers::ContainsSubstring("grid.h"));
  CHECK_THAT(message_of(R"({"colour": 1})"), Catch::Matchers::ContainsSubstring("colour"));
  CHECK_THAT(message_of(R"({"name": "a/b"})"), Catch::Matchers::ContainsSubstring("name"));
  CHECK_THAT(message_of(R"({"analysis": {"delta": 1.5}})"), Catch::Matchers::ContainsSubstring("analysis"));
  CHECK(message_of("{}").empty());
  CHECK_THROWS_AS(load_config("/nonexistent/config.json"), ConfigError);
}

TEST_CASE("config echo is closed") {
  const auto c = config_from_text(R"({
    "operator": {"mode": "bellman-sup", "lambda": 1, "Lambda": 2, "controls": [[1, 0, 0, 1], [2, 0, 0, 2]]},
    "grid": {"half": 1.5, "h": 0.0625},
    "domain": {"kind": "box"},
    "boundary": {"kind": "quadratic", "matrix": [[1, 0], [0, -1]], "value": -0.1},
    "analysis": {"radii": "2^-1..2^-3", "junction": true, "tol_u": 1e-3},
    "blowup": {"aperture": 3.0, "R": [0.5, 0.25]},
    "seed": 9, "name": "echo"})");
  const json once = to_json(c);
  const json twice = to_json(config_from_json(once));
  CHECK(once == twice);
  CHECK(once["analysis"]["radii"] == json({0.5, 0.25, 0.125}));
  CHECK(once["analysis"]["merge"].is_null());
  CHECK(once["seed"] == 9);
  // defaults are spelled out
  CHECK(once["schedule"]["eps0"] == 0.2);
  CHECK(once["solver"].contains("pucci_directions"));
}

TEST_CASE("radius lists") {
  CHECK(parse_radius_list(json("2^-2..2^-4"), "x") == std::vector<double>{0.25, 0.125, 0.0625});
  CHECK(parse_radius_list(json({0.5, 0.1}), "x") == std::vector<double>{0.5, 0.1});
  CHECK_THROWS_AS(parse_radius_list(json("2^-2..3"), "x"), ConfigError);
  CHECK_THROWS_AS(parse_radius_list(json(3), "x"), ConfigError);
}

TEST_CASE("grid dump round trip") {
  auto f = GridField::sample(Grid::centered(2, 1.0, 0.125), [](const Vec &x) { return std::sin(x[0]) - x[1] / 3; });
  const auto bytes = encode_ufbg(f);
  const auto back = decode_ufbg(bytes);
  CHECK(back.grid == f.grid);
  CHECK(back.values == f.values);
  CHECK(encode_ufbg(back) == bytes);

  const auto dir = scratch("roundtrip");
  write_ufbg((dir / "a.ufbg").string(), f);
  write_ufbg((dir / "b.ufbg").string(), read_ufbg((dir / "a.ufbg").string()));
  CHECK(slurp(dir / "a.ufbg") == slurp(dir / "b.ufbg"));

  auto bad = bytes;
  bad[0] ^= 0xff;
  CHECK_THROWS_AS(decode_ufbg(bad), FormatError);
  auto cut = bytes;
  cut.resize(cut.size() - 3);
  CHECK_THROWS_AS(decode_ufbg(cut), FormatError);
  CHECK_THROWS_AS(read_ufbg((dir / "missing.ufbg").string()), Error);
}

TEST_CASE("solve is deterministic across thread counts") {
  auto c = small_disc();
  std::string first;
  fs::path first_dir;
  for (int threads : {1, 3, 2}) {
    c.solver.threads = threads;
    const auto dir = scratch("solve-" + std::to_string(threads));
    const json r = cmd_solve(c, dir.string());
    CHECK(r["residual"].get<double>() <= 1e-7);
    CHECK(r["version"] == version_string);
    CHECK(r["command"] == "solve");
    CHECK(r["stages"].size() == 7);
    CHECK(fs::exists(dir / "disc.json"));
    const std::string dump = slurp(dir / "disc.ufbg");
    if (first.empty()) {
      first = dump;
      first_dir = dir;
    }
    CHECK(dump == first);
  }
  // the echoed config reproduces the dump
  const auto dir = scratch("solve-echo");
  const json echo = json::parse(slurp(first_dir / "disc.json"))["config"];
  cmd_solve(config_from_json(echo), dir.string());
  CHECK(slurp(dir / "disc.ufbg") == first);
}

TEST_CASE("classify reports") {
  auto c = small_disc();
  c.grid.h = 1.0 / 32;
  const auto dir = scratch("classify");
  cmd_solve(c, dir.string());
  const json disc = cmd_classify(c, dir.string(), (dir / "disc.ufbg").string());
  CHECK(disc["points"].empty());
  CHECK(slurp(dir / "disc.classify.csv") == "point,k,r_k,M,h\n");

  const auto cross = GridField::sample(Grid::centered(2, 1.0, 1.0 / 32), [](const Vec &x) { return x[0] * x[0] - x[1] * x[1]; });
  write_ufbg((dir / "cross.ufbg").string(), cross);
  c.name = "cross";
  c.analysis.junction = true;
  const json cr = cmd_classify(c, dir.string(), (dir / "cross.ufbg").string());
  REQUIRE(cr["points"].size() == 1);
  CHECK(cr["points"][0]["class"] == "rank-2-flat");
  CHECK(cr["points"][0]["junction"]["slope"].get<double>() == Approx(1.0).margin(0.02));
  CHECK(cr["constants"]["ell0"] == 1.0);

  const auto flat = GridField(Grid::centered(2, 1.0, 0.125), 1.0);
  write_ufbg((dir / "pos.ufbg").string(), flat);
  c.name = "pos";
  c.analysis.require_junction = false;
  CHECK(cmd_classify(c, dir.string(), (dir / "pos.ufbg").string())["points"].empty());
  c.analysis.require_junction = true;
  CHECK_THROWS_AS(cmd_classify(c, dir.string(), (dir / "pos.ufbg").string()), StructureError);

  std::ofstream(dir / "junk.ufbg") << "not a dump";
  CHECK_THROWS_AS(cmd_classify(c, dir.string(), (dir / "junk.ufbg").string()), FormatError);
  c.field.clear();
  CHECK_THROWS_AS(cmd_classify(c, dir.string()), ConfigError);
}

TEST_CASE("flatness report") {
  const auto dir = scratch("flatness");
  const auto u = GridField::sample(Grid::centered(2, 1.0, 1.0 / 32), [](const Vec &x) { return 4 * x[0] * x[0] - x[1] * x[1]; });
  write_ufbg((dir / "x.ufbg").string(), u);
  auto c = small_disc();
  c.name = "x";
  c.field = (dir / "x.ufbg").string();
  const json r = cmd_flatness(c, dir.string());
  REQUIRE(r["curve"].size() == 3);
  for (const auto &p : r["curve"])
    CHECK(p["h"].get<double>() <= 3.0 / 32);
  const std::string csv = slurp(dir / "x.flatness.csv");
  CHECK(csv.rfind("r,h,h_over_r,slope\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 4);
}

TEST_CASE("verify reports") {
  const auto dir = scratch("verify");
  auto c = small_disc();
  const json d = cmd_verify(c, "barrier-doubling", dir.string());
  CHECK(d["result"]["eps"].get<double>() == Approx(std::exp(-2.0) / 2).epsilon(1e-14));
  c.verify.n = 3;
  const json nd = cmd_verify(c, "barrier-nondeg", dir.string());
  CHECK(nd["result"]["c"].get<double>() == Approx(0.125).margin(1e-12));
  CHECK(nd["pass"] == true);
  CHECK(cmd_verify(c, "ellipticity", dir.string())["pass"] == true);
  CHECK(cmd_verify(c, "homogeneity", dir.string())["pass"] == true);
  CHECK(fs::exists(dir / "disc.verify-homogeneity.json"));
  CHECK_THROWS_AS(cmd_verify(c, "curvature", dir.string()), ConfigError);
}

TEST_CASE("blowup report and overrides") {
  const auto dir = scratch("blowup");
  auto c = config_from_text(R"({"name": "quarter", "blowup": {"octaves": 8}, "verify": {"samples": 2000}})");
  apply_blowup_overrides(c, {std::numbers::pi / 2, std::nullopt, std::nullopt, "", "2^-2..2^-6"});
  CHECK(c.blowup.R.size() == 5);
  const json r = cmd_blowup(c, dir.string());
  CHECK(r["blowup"]["kappa"].get<double>() == Approx(2.0).epsilon(0.03));
  CHECK(r["doubling"]["pass"] == true);
  CHECK(slurp(dir / "quarter.blowup.csv").rfind("R,sup_K_R,C_R,R_pow_kappa\n", 0) == 0);
  CHECK(slurp(dir / "quarter.profile.csv").rfind("theta,phi\n", 0) == 0);

  auto bad = c;
  CHECK_THROWS_AS(apply_blowup_overrides(bad, {0.0, std::nullopt, std::nullopt, "", ""}), ConfigError);
  CHECK_THROWS_AS(apply_blowup_overrides(bad, {std::nullopt, 3.0, 2.0, "", ""}), ConfigError);
  CHECK_THROWS_AS(apply_blowup_overrides(bad, {std::nullopt, std::nullopt, std::nullopt, "/nonexistent.json", ""}),
                  ConfigError);

  std::ofstream(dir / "controls.json") << "[[1, 0, 0, 1], [2, 0, 0, 2]]";
  auto iso = c;
  apply_blowup_overrides(iso, {std::nullopt, 1.0, 2.0, (dir / "controls.json").string(), ""});
  CHECK(iso.op.mode() == OperatorMode::bellman_sup);
  CHECK(iso.op.controls().size() == 2);
}
