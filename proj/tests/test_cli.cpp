#include <filesystem>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "doctest.h"
#include "meshrect/cli.hpp"
#include "meshrect/png_io.hpp"
#include "meshrect/synth.hpp"

using namespace meshrect;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run cli(std::vector<std::string> args) {
  std::ostringstream out;
  std::ostringstream err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

nlohmann::json read_json(const fs::path& p) {
  std::ifstream in(p);
  return nlohmann::json::parse(in);
}

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / name) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string operator/(const std::string& f) const { return (path / f).string(); }
};

}  // namespace

TEST_CASE("usage errors exit 1") {
  CHECK(cli({}).code == kExitUsage);
  CHECK(cli({"frobnicate"}).code == kExitUsage);
  const Run r = cli({"rectangle", "--input", "a.png"});
  CHECK(r.code == kExitUsage);
  CHECK_FALSE(r.err.empty());
  CHECK(cli({"rectangle", "--input", "a", "--mask", "b", "--out", "c", "--mesh", "8by6"}).code == kExitUsage);
  CHECK(cli({"synth", "--out", "x", "--count", "2"}).code == kExitUsage);
  CHECK(cli({"synth", "--out", "x", "--split", "validation"}).code == kExitUsage);
  CHECK(cli({"--help"}).code == kExitOk);
}

TEST_CASE("missing files exit 2") {
  const Run r = cli({"rectangle", "--input", "/nonexistent/i.png", "--mask", "/nonexistent/m.png", "--out", "/tmp/o.png"});
  CHECK(r.code == kExitIo);
  CHECK(r.err.find('\n') == r.err.size() - 1);
  CHECK(cli({"eval", "--pred", "/nonexistent/p", "--gt", "/nonexistent/g", "--report", "/tmp/r.json"}).code == kExitIo);
}

TEST_CASE("rectangle on an already rectangular image") {
  const TempDir dir("meshrect_cli_rect");
  const ImageBuffer img = procedural_image(96, 64, 2);
  save_png(img, dir / "in.png");
  save_png(MaskBuffer(96, 64, 1.0), dir / "mask.png");
  const Run r = cli({"rectangle", "--input", dir / "in.png", "--mask", dir / "mask.png", "--label", dir / "in.png",
                     "--out", dir / "out.png", "--report", dir / "r.json", "--mesh-out", dir / "m.json", "--mesh",
                     "4x3"});
  REQUIRE(r.code == kExitOk);
  CHECK(load_png(dir / "out.png") == load_png(dir / "in.png"));
  const auto report = read_json(dir / "r.json");
  for (const char* stage : {"primary", "residual", "final"}) {
    CHECK(report["energy"][stage]["total"].get<double>() <= 1e-9);
  }
  CHECK(report["converged"].get<bool>());
  CHECK(report["metrics"]["psnr"].get<double>() == 99.0);
  CHECK(report["metrics"]["ssim"].get<double>() == doctest::Approx(1.0));
  CHECK(load_mesh(dir / "m.json").rows() == 5);
}

TEST_CASE("non-convergence exits 3 but still writes outputs") {
  const TempDir dir("meshrect_cli_budget");
  EnergyConfig cfg;
  cfg.image_w = 128;
  cfg.image_h = 96;
  cfg.mesh_u = 4;
  cfg.mesh_v = 3;
  const MeshGrid rigid = build_rigid_mesh(128, 96, 4, 3);
  const Triplet t = synthesize_triplet(procedural_image(128, 96, 1), random_deformation(rigid, 8.0, 1), cfg);
  save_png(t.stitched, dir / "in.png");
  save_png(t.mask, dir / "mask.png");
  const Run r = cli({"rectangle", "--input", dir / "in.png", "--mask", dir / "mask.png", "--out", dir / "out.png",
                     "--report", dir / "r.json", "--mesh", "4x3", "--iters", "2"});
  CHECK(r.code == kExitNumerical);
  CHECK(fs::exists(dir / "out.png"));
  CHECK_FALSE(read_json(dir / "r.json")["converged"].get<bool>());
}

TEST_CASE("synth, rectangle and eval pipeline") {
  const TempDir dir("meshrect_cli_pipeline");
  REQUIRE(cli({"synth", "--procedural", "2", "--out", dir / "data", "--count", "2", "--seed", "7", "--width", "128",
               "--height", "96", "--mesh", "4x3", "--magnitude", "8"})
              .code == kExitOk);
  fs::create_directories(dir.path / "pred");
  for (const char* k : {"00000", "00001"}) {
    const std::string data = dir / "data";
    const Run r = cli({"rectangle", "--input", data + "/input_" + k + ".png", "--mask", data + "/mask_" + k + ".png",
                       "--out", dir / ("pred/output_" + std::string(k) + ".png"), "--mesh", "4x3", "--label-free"});
    CHECK(r.code == kExitOk);
    fs::copy_file(data + "/input_" + k + ".png", dir / ("pred/input_" + std::string(k) + ".png"));
  }
  REQUIRE(cli({"eval", "--pred", dir / "pred", "--gt", dir / "data", "--report", dir / "out.json"}).code == kExitOk);
  REQUIRE(cli({"eval", "--pred", dir / "pred", "--gt", dir / "data", "--report", dir / "in.json", "--pred-prefix",
               "input_"})
              .code == kExitOk);
  const auto out = read_json(dir / "out.json");
  const auto in = read_json(dir / "in.json");
  CHECK(out["count"].get<int>() == 2);
  CHECK(out["mean_psnr"].get<double>() > in["mean_psnr"].get<double>());
}

TEST_CASE("synth split defaults") {
  const TempDir dir("meshrect_cli_split");
  // Zero-count split runs only validate arguments.
  CHECK(cli({"synth", "--procedural", "1", "--out", dir / "d", "--split", "test", "--count", "0"}).code == kExitOk);
  CHECK_FALSE(fs::exists(dir / "d/test"));
  CHECK(cli({"synth", "--procedural", "1", "--out", dir / "d", "--split", "test", "--count", "1", "--width", "64",
             "--height", "48", "--mesh", "4x3", "--magnitude", "4"})
            .code == kExitOk);
  CHECK(fs::exists(dir / "d/test/manifest.json"));
}

TEST_CASE("gradcheck subcommand") {
  const Run r = cli({"gradcheck", "--seed", "3", "--trials", "3"});
  CHECK(r.code == kExitOk);
  CHECK(r.out.find("max relative error") != std::string::npos);
}
