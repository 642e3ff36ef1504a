// rfm: transform, check, round-trip and curvature reports for scene files.

#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "rfm/rfm.hpp"

namespace {

struct Flags {
  std::string scene;
  std::string format = "text";
  std::string output;
  rfm::CommandOptions opt;
  std::uint64_t seed = 0;
};

int emit(const rfm::Report& r, const Flags& f) {
  const std::string text = rfm::render(r, f.format == "json");
  if (f.output.empty()) {
    (r.body.contains("error") ? std::cerr : std::cout) << text;
  } else {
    std::ofstream out(f.output, std::ios::binary);
    if (!out) {
      std::cerr << "cannot write " << f.output << "\n";
      return rfm::kExitParse;
    }
    out << text;
  }
  return r.exit_code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Real Fourier-Mukai transforms of local systems on tori"};
  app.require_subcommand(1);
  Flags f;

  auto common = [&](CLI::App* c) {
    c->add_option("--format", f.format, "Output format")
        ->check(CLI::IsMember({"text", "json"}))
        ->capture_default_str();
    c->add_option("-o,--output", f.output, "Write the report to a file");
    c->add_option("--tol", f.opt.sample.tol, "Tolerance for sampled zero tests")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    c->add_option("--grid", f.opt.sample.grid, "Sample points per axis")
        ->check(CLI::Range(2, 1000))
        ->capture_default_str();
  };

  auto* transform = app.add_subcommand("transform", "Transform the scene");
  auto* check = app.add_subcommand("check", "Check the conditions of the scene");
  auto* roundtrip = app.add_subcommand("roundtrip", "Transform forward and back, compare canonical forms");
  auto* curvature = app.add_subcommand("curvature", "Curvature of the transformed connection by type");
  for (auto* c : {transform, check, curvature}) {
    common(c);
    c->add_option("scene", f.scene, "Scene file")->required();
  }
  common(roundtrip);
  roundtrip->add_option("scene", f.scene, "Scene file (omit with --seed)");
  auto* seed_opt = roundtrip->add_option("--seed", f.seed, "Replay random relative instances");
  roundtrip->add_option("--count", f.opt.count, "Instances for --seed")
      ->check(CLI::Range(1, 100000))
      ->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : rfm::kExitParse;
  }

  try {
    if (roundtrip->parsed() && seed_opt->count() > 0) {
      if (!f.scene.empty()) throw rfm::Error("give either a scene or --seed, not both");
      f.opt.seed = f.seed;
      return emit(rfm::cmd_roundtrip_seeded(f.opt), f);
    }
    if (f.scene.empty()) throw rfm::Error("a scene file is required");
    rfm::Scene sc = rfm::load_scene(rfm::read_file(f.scene));
    if (transform->parsed()) return emit(rfm::cmd_transform(sc, f.opt), f);
    if (check->parsed()) return emit(rfm::cmd_check(sc, f.opt), f);
    if (roundtrip->parsed()) return emit(rfm::cmd_roundtrip(sc, f.opt), f);
    return emit(rfm::cmd_curvature(sc, f.opt), f);
  } catch (const std::exception& e) {
    return emit(rfm::error_report(e), f);
  }
}
