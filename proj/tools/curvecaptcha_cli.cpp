// curvecaptcha: offline generation / verification, attack simulation, and the
// challenge service.
//
// Exit codes: 0 success, 1 failed verdict or gate, 2 usage or I/O error.

#include <csignal>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include <curvecaptcha/attack.hpp>
#include <curvecaptcha/challenge.hpp>
#include <curvecaptcha/http_api.hpp>
#include <curvecaptcha/service.hpp>
#include <curvecaptcha/trace_io.hpp>

namespace cap = curvecaptcha;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailed = 1;
constexpr int kExitUsage = 2;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary);
  if (!out || !out.write(bytes.data(), std::streamsize(bytes.size())) || !out.flush())
    throw UsageError("cannot write " + path);
}

struct GenOptions {
  std::string variant = "long";
  std::uint64_t seed = 1;
  std::string out = "challenge.png";
  std::string meta = "challenge.json";
  int width = 480;
  int height = 800;
  int stroke_width = cap::kDefaultStrokeWidth;
  bool fixed_clock = false;
};

int run_gen(const GenOptions& o) {
  cap::ChallengeParams p;
  p.variant = cap::parse_variant(o.variant);
  p.canvas = {o.width, o.height};
  p.stroke_width = o.stroke_width;
  const cap::GlyphDatabase db = cap::make_database_for(p, cap::derive_seed(o.seed, 1));
  cap::Rng rng(cap::derive_seed(o.seed, 2));
  const cap::Challenge c = cap::assemble_challenge(rng, db, p);

  cap::ChallengeMeta m{c.variant, c.canvas, o.seed, o.fixed_clock ? 0 : cap::system_clock_ms(),
                      p.stroke_width, c.bezier, c.curves};
  write_file(o.out, std::string(c.image.encoded.begin(), c.image.encoded.end()));
  write_file(o.meta, cap::meta_to_json(m).dump(2) + "\n");
  std::cout << "wrote " << o.out << " (" << c.image.encoded.size() << " bytes, " << c.canvas.width << "x"
            << c.canvas.height << ", " << cap::to_string(c.variant) << ") and " << o.meta << "\n";
  return kExitOk;
}

struct VerifyOptions {
  std::string meta;
  std::string trace;
  double confidence = 0.99;
  bool normality = false;
};

int run_verify(const VerifyOptions& o) {
  cap::ChallengeMeta m;
  cap::Trace trace;
  try {
    m = cap::meta_from_json(nlohmann::json::parse(read_file(o.meta)));
    trace = cap::parse_trace(read_file(o.trace));
  } catch (const nlohmann::json::exception& e) {
    throw UsageError(std::string("malformed document: ") + e.what());
  } catch (const cap::ProtocolError& e) {
    throw UsageError(e.what());
  }
  cap::VerifyConfig cfg;
  cfg.confidence = o.confidence;
  cfg.normality_gating = o.normality;
  cfg.validate();
  const cap::Verdict v = cap::verify_geometry(m.variant, m.curves, m.canvas, trace, cfg);
  std::cout << cap::verdict_to_json(v).dump() << "\n";
  return v.passed ? kExitOk : kExitFailed;
}

struct AttackOptions {
  std::string attacker = "random-line";
  int trials = 1000;
  std::string variant = "long";
  std::uint64_t seed = 1;
  double confidence = 0.99;
  double jitter = 3.0;
  bool no_precheck = false;
  unsigned threads = 0;
  std::string json_out;
};

int run_attack(const AttackOptions& o) {
  cap::AttackerSpec spec{cap::parse_attacker(o.attacker), o.jitter, o.trials};
  if (o.trials < 100) throw UsageError("--trials must be at least 100");
  cap::VerifyConfig cfg;
  cfg.confidence = o.confidence;
  cfg.precheck_enabled = !o.no_precheck;
  cfg.validate();
  const auto report = cap::measure_breakability(spec, cap::parse_variant(o.variant), cfg, o.seed, {}, o.threads);
  std::cout << cap::report_table(report);
  if (!o.json_out.empty()) write_file(o.json_out, cap::report_to_json(report).dump(2) + "\n");
  bool gate = true;
  if (spec.kind == cap::AttackerKind::Honest) gate = report.pass_rate >= 0.95;
  if (spec.kind == cap::AttackerKind::RandomLine) gate = report.pass_rate <= 0.05;
  std::cout << "gate: " << (gate ? "PASS" : "FAIL") << "\n";
  return gate ? kExitOk : kExitFailed;
}

struct ServeOptions {
  std::string host = "127.0.0.1";
  int port = 8080;
  int ttl = 60;
  double confidence = 0.99;
  std::string variant = "long";
  std::string glyph_dir;
  bool synthetic = false;
  std::optional<std::uint64_t> seed;
  std::string static_dir;
  std::size_t capacity = 100000;
};

int run_serve(const ServeOptions& o) {
  cap::ServiceConfig cfg;
  cfg.ttl_seconds = o.ttl;
  cfg.capacity = o.capacity;
  cfg.default_variant = cap::parse_variant(o.variant);
  cfg.verify.confidence = o.confidence;
  cfg.master_seed = o.seed;

  std::unique_ptr<cap::CaptchaService> service;
  if (!o.glyph_dir.empty()) {
    auto db = cap::load_tile_directory(o.glyph_dir, cfg.params.stroke_width);
    cfg.params.rows = 4;
    cfg.params.cols = 2;
    cfg.params.canvas = {db.tile_width() * cfg.params.cols, db.tile_height() * cfg.params.rows};
    auto copy = db;
    service = std::make_unique<cap::CaptchaService>(cfg, std::move(db), std::move(copy));
  } else {
    service = cap::CaptchaService::synthetic(cfg);
  }

  sigset_t signals;
  sigemptyset(&signals);
  sigaddset(&signals, SIGINT);
  sigaddset(&signals, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &signals, nullptr);

  cap::HttpFrontend http(*service, o.static_dir.empty() ? std::nullopt
                                                       : std::optional<std::filesystem::path>(o.static_dir));
  const int port = http.bind(o.host, o.port);
  if (port < 0) throw UsageError("cannot bind " + o.host + ":" + std::to_string(o.port));
  std::cout << "listening on http://" << o.host << ":" << port << std::endl;

  std::thread waiter([&] {
    int sig = 0;
    sigwait(&signals, &sig);
    http.stop();
  });
  http.listen_after_bind();
  // listen may also end without a signal; wake the waiter either way.
  pthread_kill(waiter.native_handle(), SIGTERM);
  waiter.join();
  std::cout << "stopped" << std::endl;
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"curvecaptcha: curve-tracing CAPTCHA tooling"};
  app.require_subcommand(1);

  GenOptions gen;
  auto* g = app.add_subcommand("gen", "generate a challenge image and its metadata offline");
  g->add_option("--variant", gen.variant)->check(CLI::IsMember({"long", "short"}));
  g->add_option("--seed", gen.seed);
  g->add_option("--out", gen.out, "challenge image (PNG)");
  g->add_option("--meta", gen.meta, "metadata document (JSON, includes curve geometry)");
  g->add_option("--width", gen.width)->check(CLI::Range(64, 8192));
  g->add_option("--height", gen.height)->check(CLI::Range(64, 8192));
  g->add_option("--stroke-width", gen.stroke_width)->check(CLI::Range(1, 32));
  g->add_flag("--fixed-clock", gen.fixed_clock, "write generated_at = 0");

  VerifyOptions ver;
  auto* v = app.add_subcommand("verify", "verify a trace document against challenge metadata");
  v->add_option("--meta", ver.meta)->required();
  v->add_option("--trace", ver.trace)->required();
  v->add_option("--confidence", ver.confidence)->check(CLI::Range(0.5, 0.999999));
  v->add_flag("--normality", ver.normality, "gate on Shapiro-Wilk normality of the deviations");

  AttackOptions att;
  auto* a = app.add_subcommand("attack", "measure pass rates of simulated solvers and attackers");
  a->add_option("--attacker", att.attacker)
      ->check(CLI::IsMember({"honest", "random-line", "random-curve", "centroid-cheat"}));
  a->add_option("--trials", att.trials);
  a->add_option("--variant", att.variant)->check(CLI::IsMember({"long", "short"}));
  a->add_option("--seed", att.seed);
  a->add_option("--confidence", att.confidence)->check(CLI::Range(0.5, 0.999999));
  a->add_option("--jitter", att.jitter, "honest solver noise sigma (px)")->check(CLI::NonNegativeNumber);
  a->add_flag("--no-precheck", att.no_precheck, "z stage only (ablation)");
  a->add_option("--threads", att.threads);
  a->add_option("--json", att.json_out, "also write the report as JSON");

  ServeOptions srv;
  auto* s = app.add_subcommand("serve", "run the challenge/verify HTTP service");
  s->add_option("--host", srv.host);
  s->add_option("--port", srv.port)->check(CLI::Range(0, 65535));
  s->add_option("--ttl", srv.ttl, "challenge lifetime in seconds")->check(CLI::Range(1, 86400));
  s->add_option("--confidence", srv.confidence)->check(CLI::Range(0.5, 0.999999));
  s->add_option("--variant", srv.variant, "default variant")->check(CLI::IsMember({"long", "short"}));
  auto* gd = s->add_option("--glyph-dir", srv.glyph_dir, "directory of .pbm/.pgm tiles")->check(CLI::ExistingDirectory);
  auto* sy = s->add_flag("--synthetic", srv.synthetic, "procedural glyph tiles (default)");
  gd->excludes(sy);
  s->add_option("--seed", srv.seed, "master seed (testing only)");
  s->add_option("--static-dir", srv.static_dir, "serve a web client from this directory")->check(CLI::ExistingDirectory);
  s->add_option("--capacity", srv.capacity);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*g) return run_gen(gen);
    if (*v) return run_verify(ver);
    if (*a) return run_attack(att);
    if (*s) return run_serve(srv);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const cap::ParameterError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  return kExitUsage;
}
