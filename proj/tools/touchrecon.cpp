#include "touchrecon/common/image_io.hpp"
#include "touchrecon/common/log.hpp"
#include "touchrecon/eval/metrics.hpp"
#include "touchrecon/geometry/mesh_io.hpp"
#include "touchrecon/guidance/client.hpp"
#include "touchrecon/guidance/server.hpp"
#include "touchrecon/guidance/transport.hpp"
#include "touchrecon/integration/mask.hpp"
#include "touchrecon/integration/poisson.hpp"
#include "touchrecon/pipeline/checkpoint.hpp"
#include "touchrecon/touchsim/contact.hpp"
#include "touchrecon/touchsim/planner.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <csignal>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <unistd.h>

namespace fs = std::filesystem;
using namespace touchrecon;
using nlohmann::json;

namespace {

constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out) throw Error("cannot write " + path.string());
}

// Output directory built under a sibling staging name and renamed into place,
// so a crashed run never leaves a half-written directory at the final path.
class StagedDir {
 public:
  StagedDir(const std::string& out, bool force) : final_(out) {
    if (out.empty()) throw InputError("output directory must not be empty");
    if (fs::exists(final_) && !force)
      throw InputError("output directory '" + out + "' already exists (use --force to replace it)");
    staging_ = final_;
    staging_ += ".tmp-" + std::to_string(::getpid());
    fs::remove_all(staging_);
    fs::create_directories(staging_);
  }
  ~StagedDir() {
    std::error_code ec;
    if (!committed_) fs::remove_all(staging_, ec);
  }
  const fs::path& path() const { return staging_; }
  fs::path file(const std::string& name) const { return staging_ / name; }
  void commit() {
    if (fs::exists(final_)) fs::remove_all(final_);
    if (final_.has_parent_path()) fs::create_directories(final_.parent_path());
    fs::rename(staging_, final_);
    committed_ = true;
  }

 private:
  fs::path final_, staging_;
  bool committed_ = false;
};

void write_json(const fs::path& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

void write_mesh_atomic(const std::string& path, const TriangleMesh& mesh) {
  const std::string tmp = path + ".tmp";
  save_mesh(tmp, mesh);
  fs::rename(tmp, path);
}

json topology_json(const TriangleMesh& mesh) {
  const TopologyReport t = analyze_topology(mesh);
  return {{"vertices", t.vertex_count},       {"faces", t.face_count},
          {"boundary_edges", t.boundary_edges}, {"nonmanifold_edges", t.nonmanifold_edges},
          {"euler_characteristic", t.euler_characteristic}, {"watertight", t.watertight()}};
}

// ---------------------------------------------------------------- simulate

struct SimulateArgs {
  std::string mesh, out;
  int touches = 20;
  std::uint64_t seed = 0;
  double meters_per_unit = 0.1;
  double press_depth = 0.001;
  double gel_sigma = 0.0;
  bool force = false;
};

int cmd_simulate(const SimulateArgs& a) {
  if (a.touches < 1) throw InputError("--touches must be at least 1");
  if (!(a.meters_per_unit > 0)) throw InputError("--meters-per-unit must be positive");
  TriangleMesh mesh = load_mesh(a.mesh);
  transform_mesh(mesh, a.meters_per_unit, Vec3::Zero());
  ObservationSet set;
  set.meters_per_unit = a.meters_per_unit;
  set.spec.press_depth = a.press_depth;
  set.spec.validate();
  const RayCaster caster(mesh);
  std::vector<PlannedTouch> planned;
  try {
    planned = plan_and_render(caster, a.touches, set.spec, a.seed);
  } catch (const PlannerError& e) {
    std::cerr << "simulate: " << e.what() << " (" << e.achieved() << " of " << a.touches << " touches planned)\n";
    return kExitRuntime;
  }
  for (std::size_t i = 0; i < planned.size(); ++i) {
    TactileObservation obs = std::move(planned[i].observation);
    if (a.gel_sigma > 0) obs = gel_filter(obs, a.gel_sigma);
    obs.touch_id = static_cast<int>(i);
    set.observations.push_back(std::move(obs));
  }
  set.extra = {{"command", "simulate"},     {"mesh", fs::absolute(a.mesh).string()},
               {"touches", a.touches},      {"seed", a.seed},
               {"gel_sigma_px", a.gel_sigma}};
  StagedDir out(a.out, a.force);
  write_observation_set(out.path().string(), set);
  out.commit();
  std::cout << "wrote " << set.observations.size() << " observations to " << a.out << "\n";
  return 0;
}

// --------------------------------------------------------------- integrate

struct IntegrateArgs {
  std::string obs, gradients, out;
  double standoff = 0.020;
  double pitch = 0.0;  // gradients mode; 0: default sensor pitch
  double threshold = 5e-5;
  bool force = false;
};

int cmd_integrate(const IntegrateArgs& a) {
  if (a.obs.empty() == a.gradients.empty()) throw InputError("pass exactly one of --obs or --gradients");
  StagedDir out(a.out, a.force);
  if (!a.gradients.empty()) {
    const GradientField g = read_gradient_field(a.gradients);
    PoissonOptions opts;
    opts.pixel_pitch = a.pitch > 0 ? a.pitch : SensorSpec{}.pixel_pitch();
    const Grid2<double> depth = integrate_gradients(g, opts);
    const Mask mask = mask_from_depth(depth, a.threshold);
    write_pfm(out.file("depth.pfm").string(), depth);
    write_pgm_mask(out.file("mask.pgm").string(), mask);
    std::size_t contact = 0;
    for (auto m : mask.data()) contact += m != 0;
    write_json(out.file("integrate.json"), {{"command", "integrate"},
                                            {"gradients", fs::absolute(a.gradients).string()},
                                            {"pixel_pitch_m", opts.pixel_pitch},
                                            {"threshold_m", a.threshold},
                                            {"contact_pixels", contact}});
    out.commit();
    std::cout << "integrated depth written to " << a.out << "\n";
    return 0;
  }
  const ObservationSet set = read_observation_set(a.obs);
  json touches = json::array();
  for (std::size_t i = 0; i < set.observations.size(); ++i) {
    const auto& o = set.observations[i];
    const VirtualObservation v = to_virtual_observation(o, set.spec, a.standoff);
    const std::string dir = (out.path() / touch_dir_name(static_cast<int>(i))).string();
    write_virtual_observation(dir, v);
    write_pose_txt(dir + "/sensor_pose.txt", o.sensor_pose);
    touches.push_back({{"touch_id", o.touch_id}, {"rays", observation_rays(v, o.sensor_pose).size()}});
  }
  write_json(out.file("integrate.json"), {{"command", "integrate"},
                                          {"observations", fs::absolute(a.obs).string()},
                                          {"standoff_m", a.standoff},
                                          {"touches", touches}});
  out.commit();
  std::cout << "wrote " << set.observations.size() << " virtual observations to " << a.out << "\n";
  return 0;
}

// ------------------------------------------------------------- reconstruct

struct ConfigArgs {
  std::string config_path, profile;
  std::map<std::string, std::string> overrides;  // filled from --<key> flags
};

PipelineConfig build_config(const ConfigArgs& a, const std::string* base_text) {
  if (base_text && (!a.config_path.empty() || !a.profile.empty()))
    throw InputError("--config and --profile cannot be combined with --resume");
  if (!a.config_path.empty() && !a.profile.empty())
    throw InputError("pass either --config or --profile, not both");
  PipelineConfig c;
  if (base_text)
    c = parse_config(*base_text);
  else if (!a.config_path.empty())
    c = load_config(a.config_path);
  else if (!a.profile.empty())
    c = profile_defaults(a.profile);
  else
    throw InputError("missing config key 'profile' (pass --config or --profile)");
  for (const auto& [key, value] : a.overrides) set_config_value(c, key, value);
  c.validate();
  return c;
}

struct ReconstructArgs {
  std::string obs, out, backend, target, resume;
  double template_lambda = 1.0;
  bool stage1_only = false;
  bool force = false;
  int checkpoint_every = 500;
  int progress_every = 100;
  ConfigArgs config;
};

std::shared_ptr<GuidanceBackend> open_backend(const std::string& flag, const std::string& target_path,
                                              double lambda) {
  std::string spec = flag;
  if (spec.empty()) {
    if (const char* env = std::getenv(kEndpointEnvVar)) spec = env;
  }
  if (spec.empty())
    throw InputError(std::string("no guidance backend: pass --backend (zero, template or host:port) or set ") +
                     kEndpointEnvVar);
  std::optional<TriangleMesh> target;
  if (!target_path.empty()) target = load_mesh(target_path);
  return make_backend(spec, target ? &*target : nullptr, lambda);
}

int cmd_reconstruct(const ReconstructArgs& a) {
  if (a.checkpoint_every < 0) throw InputError("--checkpoint-every must be non-negative");
  std::optional<Checkpoint> resume;
  if (!a.resume.empty()) resume = load_checkpoint(a.resume);
  const PipelineConfig config = build_config(a.config, resume ? &resume->config_text : nullptr);
  const ObservationSet set = read_observation_set(a.obs);
  const TouchData touches = prepare_touch_data(set);
  // Connect before any output exists so an unreachable service fails fast.
  auto backend = open_backend(a.backend, a.target, a.template_lambda);

  StagedDir out(a.out, a.force);
  write_text(out.file("config.txt"), config_to_text(config));
  json manifest = {{"command", "reconstruct"},
                   {"observations", fs::absolute(a.obs).string()},
                   {"config", a.config.config_path.empty() ? json(nullptr) : json(fs::absolute(a.config.config_path))},
                   {"profile", config.profile},
                   {"output", fs::absolute(a.out).string()},
                   {"seed", config.seed},
                   {"prompt", config.sds.prompt},
                   {"backend", backend->name()},
                   {"target", a.target.empty() ? json(nullptr) : json(fs::absolute(a.target))},
                   {"stage1_only", a.stage1_only},
                   {"resume", a.resume.empty() ? json(nullptr) : json(fs::absolute(a.resume))},
                   {"touches", touches.touch_count()},
                   {"rays", touches.rays.size()},
                   {"meters_per_unit", touches.meters_per_unit}};
  write_json(out.file("manifest.json"), manifest);

  std::ofstream losses(out.file("losses.jsonl"));
  const auto report = [&](const json& rec) {
    losses << rec.dump() << '\n';
    const int step = rec.value("step", 0);
    if (a.progress_every > 0 && step % a.progress_every == 0)
      log().info("stage {} step {}: {}", rec.value("stage", 0), step, rec.dump());
  };
  json summary = {{"status", "ok"}};
  const auto t0 = std::chrono::steady_clock::now();
  int status = 0;

  try {
    std::optional<Stage1State> s1;
    std::optional<Stage2State> s2;
    if (resume && resume->stage == 2)
      s2 = std::move(resume->stage2);
    else
      s1 = resume ? std::move(resume->stage1) : stage1_init(config);

    if (s1) {
      TrainControl control;
      control.report = report;
      control.checkpoint_path = out.file("stage1.ckpt").string();
      control.checkpoint_every = a.checkpoint_every;
      stage1_train(config, touches, *backend, *s1, control);
      Checkpoint c;
      c.stage = 1;
      c.config_text = config_to_text(config);
      c.stage1 = *s1;
      save_checkpoint(control.checkpoint_path, c);
      const TriangleMesh coarse = extract_field_mesh(s1->field, config.stage2.tet_resolution, config.stage2.iso);
      save_mesh(out.file("stage1_mesh.obj").string(), coarse);
      summary["stage1"] = {{"steps", s1->step},
                           {"guidance_requests", s1->sds_requests},
                           {"guidance_failures", s1->sds_failures},
                           {"seconds", seconds_since(t0)},
                           {"mesh", topology_json(coarse)}};
      if (!a.stage1_only) s2 = stage2_init(config, *s1);
    }
    if (s2 && !a.stage1_only) {
      const auto t2 = std::chrono::steady_clock::now();
      TrainControl control;
      control.report = report;
      control.checkpoint_path = out.file("stage2.ckpt").string();
      control.checkpoint_every = a.checkpoint_every;
      stage2_refine(config, touches, *backend, *s2, control);
      Checkpoint c;
      c.stage = 2;
      c.config_text = config_to_text(config);
      c.stage2 = *s2;
      save_checkpoint(control.checkpoint_path, c);
      const TriangleMesh mesh = stage2_mesh(*s2);
      save_mesh(out.file("mesh.obj").string(), mesh);
      summary["stage2"] = {{"steps", s2->step},
                           {"guidance_requests", s2->sds_requests},
                           {"guidance_failures", s2->sds_failures},
                           {"iso", s2->tet.iso()},
                           {"iso_fallback", s2->iso_fallback},
                           {"seconds", seconds_since(t2)},
                           {"mesh", topology_json(mesh)}};
    }
  } catch (const GuidanceAbort& e) {
    // The training loop already wrote the partial checkpoint.
    summary["status"] = "aborted";
    summary["error"] = e.what();
    summary["step"] = e.step();
    std::cerr << "reconstruct: " << e.what() << " at step " << e.step() << "; partial checkpoint kept in " << a.out
              << "\n";
    status = kExitRuntime;
  }
  summary["seconds"] = seconds_since(t0);
  losses.close();
  write_json(out.file("summary.json"), summary);
  out.commit();
  if (status == 0) std::cout << "reconstruction written to " << a.out << "\n";
  return status;
}

// ----------------------------------------------------------------- extract

struct ExtractArgs {
  std::string checkpoint, out;
  int resolution = 0;  // stage-1 checkpoints; 0: stage2.tet_resolution
  std::optional<double> iso;
};

int cmd_extract(const ExtractArgs& a) {
  const Checkpoint c = load_checkpoint(a.checkpoint);
  const PipelineConfig config = parse_config(c.config_text);
  TriangleMesh mesh;
  if (c.stage == 1) {
    const int res = a.resolution > 0 ? a.resolution : config.stage2.tet_resolution;
    mesh = extract_field_mesh(c.stage1.field, res, a.iso.value_or(config.stage2.iso));
  } else {
    if (a.resolution > 0) throw InputError("--resolution applies to stage-1 checkpoints only");
    Stage2State s = c.stage2;
    if (a.iso) s.tet.set_iso(*a.iso);
    mesh = stage2_mesh(s);
  }
  write_mesh_atomic(a.out, mesh);
  std::cout << topology_json(mesh).dump() << "\n";
  return 0;
}

// -------------------------------------------------------------------- eval

struct EvalArgs {
  std::string recon, gt;
  std::size_t n = 2048;
  std::size_t chamfer_samples = 20000;
  std::uint64_t seed = 0;
  std::string method = "auto";
};

int cmd_eval(const EvalArgs& a) {
  EvalOptions o;
  o.samples = a.n;
  o.chamfer_samples = a.chamfer_samples;
  o.seed = a.seed;
  if (a.method == "hungarian")
    o.method = EmdMethod::Hungarian;
  else if (a.method == "sinkhorn")
    o.method = EmdMethod::Sinkhorn;
  const TriangleMesh recon = load_mesh(a.recon);
  const TriangleMesh gt = load_mesh(a.gt);
  std::cout << evaluate(recon, gt, o).to_json().dump(2) << "\n";
  return 0;
}

// -------------------------------------------------------------- serve-mock

struct ServeArgs {
  std::string backend = "zero", target, host = "127.0.0.1";
  double lambda = 1.0;
  int port = 0;
  bool stdio = false;
};

int cmd_serve(const ServeArgs& a) {
  if (a.backend != "zero" && a.backend != "template")
    throw InputError("serve-mock backend must be 'zero' or 'template'");
  auto backend = open_backend(a.backend, a.target, a.lambda);
  ServerOptions opts;
  opts.host = a.host;
  opts.port = a.port;
  if (a.stdio) {
    std::mutex mutex;
    serve_stream(STDIN_FILENO, STDOUT_FILENO, *backend, mutex, opts);
    return 0;
  }
  // Block the stop signals before the server threads start so only sigwait
  // sees them.
  sigset_t signals;
  sigemptyset(&signals);
  sigaddset(&signals, SIGINT);
  sigaddset(&signals, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &signals, nullptr);
  GuidanceServer server(backend, opts);
  std::cout << "listening on " << server.endpoint() << std::endl;
  int sig = 0;
  sigwait(&signals, &sig);
  server.stop();
  return 0;
}

int run(int argc, char** argv) {
  CLI::App app{"Tactile shape reconstruction with guidance from a 2D prior"};
  app.require_subcommand(1);
  bool verbose = false;
  app.add_flag("-v,--verbose", verbose, "Log progress at info level");

  SimulateArgs sim;
  auto* s = app.add_subcommand("simulate", "Plan touches over a mesh and write simulated observations");
  s->add_option("--mesh", sim.mesh, "Ground-truth mesh (OBJ/PLY, domain units)")->required()->check(CLI::ExistingFile);
  s->add_option("--out", sim.out, "Output observation directory")->required();
  s->add_option("-k,--touches", sim.touches, "Number of touches")->capture_default_str();
  s->add_option("--seed", sim.seed, "Planner seed")->capture_default_str();
  s->add_option("--meters-per-unit", sim.meters_per_unit, "Metric size of one mesh unit")->capture_default_str();
  s->add_option("--press-depth", sim.press_depth, "Press depth in meters")->capture_default_str();
  s->add_option("--gel-sigma", sim.gel_sigma, "Gel filter sigma in pixels")->capture_default_str();
  s->add_flag("--force", sim.force, "Replace an existing output directory");

  IntegrateArgs integ;
  auto* i = app.add_subcommand("integrate", "Convert observations into virtual camera observations");
  i->add_option("--obs", integ.obs, "Observation directory")->check(CLI::ExistingDirectory);
  i->add_option("--gradients", integ.gradients, "Gradient field directory (gx.pfm, gy.pfm, mask.pgm)")
      ->check(CLI::ExistingDirectory);
  i->add_option("--out", integ.out, "Output directory")->required();
  i->add_option("--standoff", integ.standoff, "Virtual camera standoff in meters")->capture_default_str();
  i->add_option("--pitch", integ.pitch, "Pixel pitch in meters for --gradients");
  i->add_option("--threshold", integ.threshold, "Contact depth threshold in meters")->capture_default_str();
  i->add_flag("--force", integ.force, "Replace an existing output directory");

  ReconstructArgs rec;
  auto* r = app.add_subcommand("reconstruct", "Run stage 1 and stage 2 on an observation directory");
  r->add_option("--obs", rec.obs, "Observation directory")->required()->check(CLI::ExistingDirectory);
  r->add_option("--out", rec.out, "Output directory")->required();
  r->add_option("--config", rec.config.config_path, "Config file")->check(CLI::ExistingFile);
  r->add_option("--backend", rec.backend,
                std::string("Guidance backend: zero, template or host:port (default: $") + kEndpointEnvVar + ")");
  r->add_option("--target", rec.target, "Target mesh for the template backend")->check(CLI::ExistingFile);
  r->add_option("--template-lambda", rec.template_lambda, "Template backend gain")->capture_default_str();
  r->add_option("--resume", rec.resume, "Continue from a checkpoint")->check(CLI::ExistingFile);
  r->add_option("--checkpoint-every", rec.checkpoint_every, "Checkpoint period in steps (0: stage ends only)")
      ->capture_default_str();
  r->add_option("--progress-every", rec.progress_every, "Progress log period in steps")->capture_default_str();
  r->add_flag("--stage1-only", rec.stage1_only, "Stop after stage 1");
  r->add_flag("--force", rec.force, "Replace an existing output directory");
  // Every config key is also a flag; flags win over the config file.
  for (const auto& key : config_keys()) {
    if (key == "profile") {
      r->add_option("--profile", rec.config.profile, "Profile defaults (simulation, real, desk)");
      continue;
    }
    r->add_option_function<std::string>(
         "--" + key, [&rec, key](const std::string& v) { rec.config.overrides[key] = v; }, "Config key " + key)
        ->group("Config keys");
  }

  ExtractArgs ext;
  auto* x = app.add_subcommand("extract", "Extract a mesh from a checkpoint");
  x->add_option("--checkpoint", ext.checkpoint, "Checkpoint file")->required()->check(CLI::ExistingFile);
  x->add_option("--out", ext.out, "Output mesh (OBJ/PLY)")->required();
  x->add_option("--resolution", ext.resolution, "Tet resolution for stage-1 checkpoints");
  x->add_option_function<double>("--iso", [&ext](double v) { ext.iso = v; }, "Extraction iso value");

  EvalArgs ev;
  auto* e = app.add_subcommand("eval", "Compare a reconstruction with ground truth (JSON on stdout)");
  e->add_option("--recon", ev.recon, "Reconstructed mesh")->required();
  e->add_option("--gt", ev.gt, "Ground-truth mesh")->required();
  e->add_option("-n,--n", ev.n, "EMD points per cloud")->capture_default_str();
  e->add_option("--chamfer-samples", ev.chamfer_samples, "Chamfer points per cloud")->capture_default_str();
  e->add_option("--seed", ev.seed, "Sampling seed")->capture_default_str();
  e->add_option("--method", ev.method, "EMD solver")
      ->check(CLI::IsMember({"auto", "hungarian", "sinkhorn"}))
      ->capture_default_str();

  ServeArgs srv;
  auto* m = app.add_subcommand("serve-mock", "Serve a mock guidance backend over the wire protocol");
  m->add_option("--backend", srv.backend, "zero or template")->capture_default_str();
  m->add_option("--target", srv.target, "Target mesh for the template backend")->check(CLI::ExistingFile);
  m->add_option("--lambda", srv.lambda, "Template backend gain")->capture_default_str();
  m->add_option("--host", srv.host, "Listen address")->capture_default_str();
  m->add_option("--port", srv.port, "Listen port (0: ephemeral)")->capture_default_str();
  m->add_flag("--stdio", srv.stdio, "Serve one session on stdin/stdout");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    const int code = app.exit(err);
    return code == 0 ? 0 : kExitUsage;
  }
  if (verbose) log().set_level(spdlog::level::info);

  if (s->parsed()) return cmd_simulate(sim);
  if (i->parsed()) return cmd_integrate(integ);
  if (r->parsed()) return cmd_reconstruct(rec);
  if (x->parsed()) return cmd_extract(ext);
  if (e->parsed()) return cmd_eval(ev);
  return cmd_serve(srv);
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const InputError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
}
