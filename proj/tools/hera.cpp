// Copyright 2026 The Hera Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "hera/hera.hpp"
#include "hera/io/io.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <sstream>

namespace fs = std::filesystem;
using namespace hera;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInput = 2;
constexpr int kExitNumerical = 3;

struct RenderFlags {
  std::string mask = "both";
  std::string sort = "stable";
  double lambda = 0.05;
  std::string background = "0,0,0";
  std::string format = "png";
  int threads = 0;
};

void add_render_flags(CLI::App* cmd, RenderFlags& f) {
  cmd->add_option("--mask", f.mask, "Primitives to draw")->check(CLI::IsMember({"both", "mesh", "splats"}));
  cmd->add_option("--sort", f.sort, "Splat/mesh ordering")->check(CLI::IsMember({"stable", "legacy"}));
  cmd->add_option("--lambda", f.lambda, "Override distance in meters")->check(CLI::NonNegativeNumber);
  cmd->add_option("--background", f.background, "Background color R,G,B in [0,1]");
  cmd->add_option("--format", f.format, "Output format")->check(CLI::IsMember({"png", "heramap"}));
}

void add_threads_flag(CLI::App* cmd, int& threads) {
  cmd->add_option("--threads", threads, "Worker threads (default: HERA_THREADS or all cores)")
      ->check(CLI::NonNegativeNumber);
}

Vec3<float> parse_color(const std::string& text) {
  Vec3<float> c;
  std::stringstream ss(text);
  std::string item;
  int k = 0;
  while (std::getline(ss, item, ',')) {
    if (k == 3) break;
    c[k++] = io::detail::parse_number<float>(io::detail::trim(item), "--background");
  }
  if (k != 3 || std::getline(ss, item, ','))
    throw Error(ErrorCode::InvalidParameter, "--background needs three comma-separated numbers");
  return c;
}

RenderOptions render_options(const RenderFlags& f) {
  RenderOptions o;
  o.lambda = f.lambda;
  o.sort_mode = f.sort == "legacy" ? SortMode::Legacy : SortMode::Stable;
  o.primitive_mask = f.mask == "mesh" ? PrimitiveMask::MeshOnly
                     : f.mask == "splats" ? PrimitiveMask::SplatsOnly
                                          : PrimitiveMask::Both;
  o.threads = f.threads;
  return o;
}

void make_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::IoError, "cannot create '" + dir.string() + "': " + ec.message());
}

void write_image(const Image<float>& img, const fs::path& stem, const std::string& format) {
  if (format == "heramap") io::save_image_heramap(img, fs::path(stem.string() + ".heramap"));
  else io::save_display_png(fs::path(stem.string() + ".png"), img);
}

int run_render(const fs::path& scene_dir, const fs::path& cameras, const fs::path& out, const RenderFlags& f) {
  const auto bundle = io::load_bundle<float>(scene_dir);
  const auto cams = io::load_cameras<float>(cameras);
  const Scene<float> scene = bundle.scene(parse_color(f.background));
  const RenderOptions opts = render_options(f);
  make_dir(out);
  for (const auto& nc : cams.cameras) write_image(render(scene, nc.camera, opts), out / nc.name, f.format);
  return kExitOk;
}

/// Frame OBJs from a directory, or from a text file listing one path per
/// line relative to the file.
std::vector<fs::path> frame_paths(const fs::path& frames) {
  if (fs::is_directory(frames)) return io::list_frames(frames);
  std::vector<fs::path> out;
  std::stringstream ss(io::read_file(frames));
  std::string line;
  while (std::getline(ss, line)) {
    const auto name = io::detail::trim(line);
    if (name.empty() || name.front() == '#') continue;
    const fs::path p = frames.parent_path() / std::string(name);
    if (!fs::exists(p)) throw Error(ErrorCode::IoError, "frame '" + p.string() + "' listed in '" + frames.string() + "' is missing");
    out.push_back(p);
  }
  return out;
}

int run_animate(const fs::path& canonical, const fs::path& frames, const fs::path& cameras, const fs::path& out,
                const RenderFlags& f) {
  const auto bundle = io::load_bundle<float>(canonical);
  const auto cams = io::load_cameras<float>(cameras);
  const Vec3<float> bg = parse_color(f.background);
  const RiggedScene<float> rig = bundle.rigged() ? bundle.rigged_scene(bg) : rig_to_nearest_facet(bundle.scene(bg));
  const RenderOptions opts = render_options(f);
  const auto paths = frame_paths(frames);
  if (paths.empty()) throw Error(ErrorCode::IoError, "no frame OBJs in '" + frames.string() + "'");
  for (const auto& p : paths) {
    const auto vertices = io::load_frame_vertices(p, rig.mesh);
    const Scene<float> posed = pose_scene<float>(rig, vertices, DegeneratePolicy::Hide, f.threads);
    const fs::path dir = out / p.stem();
    make_dir(dir);
    for (const auto& nc : cams.cameras) write_image(render(posed, nc.camera, opts), dir / nc.name, f.format);
  }
  return kExitOk;
}

// ---------------------------------------------------------------------------
// fit

const char* kCheckpointDir = "checkpoints";
const char* kLatestFile = "latest";

std::string format_metric(double v) {
  if (std::isnan(v)) return "";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

struct MetricsFile {
  fs::path path;
  std::vector<std::string> rows;  ///< kept from an earlier run when resuming

  void load_prefix(int before_iter) {
    rows.clear();
    if (!fs::exists(path)) return;
    std::stringstream ss(io::read_file(path));
    std::string line;
    std::getline(ss, line);
    while (std::getline(ss, line)) {
      if (line.empty()) continue;
      if (std::atoi(line.c_str()) < before_iter) rows.push_back(line);
    }
  }

  void write(const std::vector<FitLogEntry>& log) const {
    std::string out = "iter,loss,psnr_holdout,num_splats\n";
    for (const auto& r : rows) out += r + "\n";
    for (const auto& e : log)
      out += std::to_string(e.iter) + "," + format_metric(e.loss) + "," + format_metric(e.psnr_holdout) + "," +
             std::to_string(e.num_splats) + "\n";
    io::write_file(path, out);
  }
};

template <typename Model>
int fit_model(Model init, std::vector<View<float>> train, std::vector<View<float>> holdout, const FitConfig& cfg,
              const fs::path& out, int start_iter) {
  Fitter<Model> fitter(std::move(init), std::move(train), std::move(holdout), cfg);
  MetricsFile metrics{out / "metrics.csv", {}};
  if (start_iter > 0) metrics.load_prefix(start_iter);
  const fs::path ckpt_root = out / kCheckpointDir;
  auto checkpoint = [&](int next_iter, const Model& model) {
    char name[32];
    std::snprintf(name, sizeof(name), "%06d", next_iter);
    io::save_scene(model, ckpt_root / name);
    io::write_file(ckpt_root / kLatestFile, std::string(name) + "\n");
    metrics.write(fitter.log());
  };
  try {
    fitter.run(start_iter, checkpoint);
  } catch (const Error& e) {
    metrics.write(fitter.log());
    throw;
  }
  io::save_scene(fitter.model(), out / "scene");
  metrics.write(fitter.log());
  if (!fitter.log().empty()) {
    const auto& last = fitter.log().back();
    std::cout << "iter " << last.iter << " loss " << format_metric(last.loss) << " psnr_holdout "
              << format_metric(last.psnr_holdout) << " splats " << last.num_splats << "\n";
  }
  return kExitOk;
}

int run_fit(const fs::path& config, const fs::path& dataset, const fs::path& out, const fs::path& init_dir,
            bool resume, int threads) {
  io::FitFile file = io::load_fit_config(config);
  if (threads > 0) file.fit.threads = threads;
  const auto cams = io::load_cameras<float>(dataset / "cameras.json");
  std::vector<View<float>> train, holdout;
  for (const auto& name : file.holdout)
    if (!cams.find(name)) throw Error(ErrorCode::InvalidParameter, config.string() + ": holdout camera '" + name + "' not in cameras.json");
  for (const auto& nc : cams.cameras) {
    const fs::path img_path = dataset / "images" / (nc.name + ".png");
    View<float> v{nc.name, nc.camera, io::load_display_png<float>(img_path)};
    if (v.target.width != nc.camera.width || v.target.height != nc.camera.height)
      throw Error(ErrorCode::SizeMismatch, img_path.string() + ": image size does not match camera '" + nc.name + "'");
    const bool held = std::find(file.holdout.begin(), file.holdout.end(), nc.name) != file.holdout.end();
    (held ? holdout : train).push_back(std::move(v));
  }

  int start_iter = 0;
  fs::path scene_dir = init_dir.empty() ? dataset / "init" : init_dir;
  if (resume) {
    const fs::path latest = out / kCheckpointDir / kLatestFile;
    if (fs::exists(latest)) {
      const std::string name(io::detail::trim(io::read_file(latest)));
      start_iter = io::detail::parse_number<int>(name, latest.string());
      scene_dir = out / kCheckpointDir / name;
    }
  }
  auto bundle = io::load_bundle<float>(scene_dir);
  if (file.zero_maps && start_iter == 0) {
    std::fill(bundle.mesh.texture.data.begin(), bundle.mesh.texture.data.end(), 0.0f);
    std::fill(bundle.mesh.opacity.data.begin(), bundle.mesh.opacity.data.end(), 0.0f);
  }
  make_dir(out);
  if (bundle.rigged()) {
    FitConfig cfg = file.fit;
    return fit_model(bundle.rigged_scene(file.background), std::move(train), std::move(holdout), cfg, out, start_iter);
  }
  return fit_model(bundle.scene(file.background), std::move(train), std::move(holdout), file.fit, out, start_iter);
}

// ---------------------------------------------------------------------------
// metrics and info

std::vector<std::string> png_names(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw Error(ErrorCode::IoError, "directory '" + dir.string() + "' not found");
  std::vector<std::string> names;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.is_regular_file() && e.path().extension() == ".png") names.push_back(e.path().filename().string());
  std::sort(names.begin(), names.end());
  return names;
}

int run_metrics(const fs::path& a, const fs::path& b) {
  const auto na = png_names(a), nb = png_names(b);
  for (const auto& n : na)
    if (!std::binary_search(nb.begin(), nb.end(), n))
      throw Error(ErrorCode::IoError, "'" + n + "' is missing from '" + b.string() + "'");
  for (const auto& n : nb)
    if (!std::binary_search(na.begin(), na.end(), n))
      throw Error(ErrorCode::IoError, "'" + n + "' is missing from '" + a.string() + "'");
  std::cout << "image,psnr,ssim\n";
  double psnr_sum = 0, ssim_sum = 0;
  for (const auto& n : na) {
    const auto x = io::read_png(a / n).cast<double>();
    const auto y = io::read_png(b / n).cast<double>();
    if (x.width != y.width || x.height != y.height)
      throw Error(ErrorCode::SizeMismatch, "'" + n + "' differs in size between the directories");
    const double p = psnr(x, y), s = ssim(x, y);
    psnr_sum += p;
    ssim_sum += s;
    std::cout << n << "," << format_metric(p) << "," << format_metric(s) << "\n";
  }
  if (!na.empty())
    std::cout << "mean," << format_metric(psnr_sum / na.size()) << "," << format_metric(ssim_sum / na.size()) << "\n";
  return kExitOk;
}

int run_info(const fs::path& scene_dir, const fs::path& cameras) {
  if (!scene_dir.empty()) {
    const auto b = io::load_bundle<float>(scene_dir);
    std::cout << "vertices " << b.mesh.vertices.size() << "\nfacets " << b.mesh.facets.size() << "\nmap "
              << b.mesh.texture.width << "x" << b.mesh.texture.height << "\ntexture_sh_degree " << b.mesh.sh_degree
              << "\nsplats " << b.splats.size() << "\nrigged " << (b.rigged() ? "yes" : "no") << "\n";
  }
  if (!cameras.empty()) {
    const auto c = io::load_cameras<float>(cameras);
    std::cout << "cameras " << c.size() << "\n";
    for (const auto& nc : c.cameras)
      std::cout << "  " << nc.name << " " << nc.camera.width << "x" << nc.camera.height << "\n";
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hybrid mesh and Gaussian splat renderer and fitter"};
  app.require_subcommand(1, 1);

  RenderFlags render_flags;
  std::string scene, cameras, out;
  auto* render_cmd = app.add_subcommand("render", "Render a scene bundle from every camera");
  render_cmd->add_option("--scene", scene, "Scene directory")->required();
  render_cmd->add_option("--cameras", cameras, "Camera JSON")->required();
  render_cmd->add_option("--out", out, "Output directory")->required();
  add_render_flags(render_cmd, render_flags);
  add_threads_flag(render_cmd, render_flags.threads);

  std::string canonical, frames;
  auto* animate_cmd = app.add_subcommand("animate", "Render a rigged bundle over a mesh sequence");
  animate_cmd->add_option("--canonical", canonical, "Canonical scene directory")->required();
  animate_cmd->add_option("--frames", frames, "Directory of frame OBJs or a file listing them")->required();
  animate_cmd->add_option("--cameras", cameras, "Camera JSON")->required();
  animate_cmd->add_option("--out", out, "Output directory")->required();
  add_render_flags(animate_cmd, render_flags);
  add_threads_flag(animate_cmd, render_flags.threads);

  std::string config, dataset, init;
  bool resume = false;
  int fit_threads = 0;
  auto* fit_cmd = app.add_subcommand("fit", "Fit maps and splats to a multi-view dataset");
  fit_cmd->add_option("--config", config, "Key/value fit configuration")->required();
  fit_cmd->add_option("--dataset", dataset, "Directory with cameras.json and images/<camera>.png")->required();
  fit_cmd->add_option("--out", out, "Output directory")->required();
  fit_cmd->add_option("--init", init, "Initial scene directory (default: <dataset>/init)");
  fit_cmd->add_flag("--resume", resume, "Continue from the latest checkpoint in --out");
  add_threads_flag(fit_cmd, fit_threads);

  std::string dir_a, dir_b;
  auto* metrics_cmd = app.add_subcommand("metrics", "Per-image PSNR and SSIM between two PNG directories");
  metrics_cmd->add_option("--a", dir_a, "First directory")->required();
  metrics_cmd->add_option("--b", dir_b, "Second directory")->required();

  std::string info_scene, info_cameras;
  auto* info_cmd = app.add_subcommand("info", "Summarize a scene bundle or camera file");
  info_cmd->add_option("--scene", info_scene, "Scene directory");
  info_cmd->add_option("--cameras", info_cameras, "Camera JSON");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitInput;
  }

  try {
    if (*render_cmd) return run_render(scene, cameras, out, render_flags);
    if (*animate_cmd) return run_animate(canonical, frames, cameras, out, render_flags);
    if (*fit_cmd) return run_fit(config, dataset, out, init, resume, fit_threads);
    if (*metrics_cmd) return run_metrics(dir_a, dir_b);
    if (*info_cmd) return run_info(info_scene, info_cameras);
  } catch (const Error& e) {
    std::cerr << "hera: " << e.what() << "\n";
    return e.code() == ErrorCode::NumericalFailure ? kExitNumerical : kExitInput;
  } catch (const std::exception& e) {
    std::cerr << "hera: " << e.what() << "\n";
    return kExitInput;
  }
  return kExitOk;
}
