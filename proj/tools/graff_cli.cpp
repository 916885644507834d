// graff: register line/plane feature files, run the synthetic benchmark,
// evaluate 2D-line curve lengths, or write synthetic fixtures.
//
// Exit codes: 0 success, 1 usage or configuration error, 2 no pairs or no inliers,
// 3 missing file or parse error, 4 solver failure.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "graff/graff.hpp"

namespace {

using namespace graff;

enum ExitCode { kOk = 0, kUsage = 1, kNoInliers = 2, kParse = 3, kSolver = 4 };

int report(const Error& e) {
  std::cerr << "error: " << e.id() << ": " << e.what() << "\n";
  const std::string& id = e.id();
  if (id == "EmptyInlierSet" || id == "EmptyInput") return kNoInliers;
  if (id == "FileError" || id == "SchemaError" || id == "RankDeficient" ||
      id == "InvalidFeaturePair" || id == "MixedAmbientDims") {
    return kParse;
  }
  if (id == "ConfigError" || id == "ZeroVector" || id == "PathThroughZero") return kUsage;
  return kSolver;
}

void emit(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
  } else {
    write_text(path, text);
  }
}

Eigen::Vector3d parse_vec3(const std::string& s) {
  std::vector<double> v;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      v.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw ConfigError("cannot parse '" + s + "' as three comma-separated numbers");
    }
  }
  if (v.size() != 3) throw ConfigError("expected three comma-separated numbers, got '" + s + "'");
  return {v[0], v[1], v[2]};
}

std::vector<double> parse_list(const std::string& s) {
  std::vector<double> v;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      v.push_back(std::stod(item));
    } catch (const std::exception&) {
      throw ConfigError("cannot parse '" + item + "' in list '" + s + "'");
    }
  }
  return v;
}

// ---------------------------------------------------------------------------

struct RegisterArgs {
  std::string target, source, kind = "l2l", corr, out;
  bool free = false;
  double eps_r = SolverConfig{}.epsilon_r;
  double eps_t = SolverConfig{}.epsilon_t;
  double t_halfside = 0.0;
  std::uint64_t seed = 0;
  int threads = 1;
  bool no_timing = false;
};

int run_register(const RegisterArgs& a) {
  const FeatureKind kind = parse_feature_kind(a.kind);
  SolverConfig cfg;
  cfg.epsilon_r = a.eps_r;
  cfg.epsilon_t = a.eps_t;
  cfg.initial_translation_halfside = a.t_halfside;
  cfg.rng_seed = a.seed;
  cfg.threads = a.threads;
  cfg.validate();

  const auto targets = parse_features(a.target);
  const auto sources = parse_features(a.source);

  RegistrationResult res;
  IdPairs inlier_ids;
  if (a.free) {
    std::vector<AffineSubspace> ts, ss;
    for (const auto& f : targets) ts.push_back(f.subspace);
    for (const auto& f : sources) ss.push_back(f.subspace);
    res = register_without_correspondences(ts, ss, kind, cfg);
    for (std::size_t i : res.inliers) {
      const auto [ti, si] = res.matches[i];
      inlier_ids.emplace_back(targets[ti].id, sources[si].id);
    }
  } else {
    const IdPairs ids = parse_correspondences(a.corr);
    const auto pairs = build_pairs(kind, targets, sources, ids);
    res = register_with_correspondences(pairs, cfg);
    for (std::size_t i : res.inliers) inlier_ids.push_back(ids[i]);
  }

  ResultFile out;
  out.rotation = res.transform.rotation3();
  out.translation = res.transform.translation3();
  out.inlier_ids = std::move(inlier_ids);
  out.f_sum = res.final_cost.f_sum();
  out.g_sum = res.final_cost.g_sum();
  out.total = res.final_cost.total;
  out.stats = stats_to_json(res.stats, !a.no_timing);
  emit(a.out, to_json_string(result_to_json(out)));
  return kOk;
}

// ---------------------------------------------------------------------------

struct BenchArgs {
  std::string kind = "l2p", ratios = "0,0.4,0.8", out, summary;
  int repeats = 5;
  std::uint64_t seed = 0;
  std::size_t n_pairs = 100;
  double eps_r = 1e-4;
  double eps_t = SolverConfig{}.epsilon_t;
  double angular_noise = 0.0;
  double position_noise = 0.0;
  double pixel_noise = 0.0;
  int threads = 1;
  bool no_timing = false;
};

int run_bench(const BenchArgs& a) {
  BenchConfig cfg;
  cfg.scene.feature_kind = parse_feature_kind(a.kind);
  cfg.scene.n_pairs = a.n_pairs;
  cfg.scene.angular_sigma = a.angular_noise;
  cfg.scene.noise_sigma = a.position_noise;
  cfg.scene.pixel_sigma = a.pixel_noise;
  cfg.solver.epsilon_r = a.eps_r;
  cfg.solver.epsilon_t = a.eps_t;
  cfg.ratios = parse_list(a.ratios);
  cfg.repeats = a.repeats;
  cfg.seed = a.seed;
  cfg.threads = a.threads;
  const BenchReport rep = run_benchmark(cfg);

  std::string csv = "ratio,repeat,rot_err_deg,trans_err_pct,inliers_found,wall_ms\n";
  for (const auto& r : rep.rows) {
    csv += format_double(r.ratio) + "," + std::to_string(r.repeat) + "," +
           format_double(r.rot_err_deg) + "," + format_double(r.trans_err_pct) + "," +
           std::to_string(r.inliers_found) + "," + format_double(a.no_timing ? 0.0 : r.wall_ms) +
           "\n";
  }
  emit(a.out, csv);

  json summary = json::array();
  for (const auto& s : rep.summary) {
    json row;
    row["ratio"] = s.ratio;
    row["median_rot_err_deg"] = s.median_rot_err_deg;
    row["median_trans_err_pct"] = s.median_trans_err_pct;
    row["all_inliers_recovered_fraction"] = s.recovered_fraction;
    row["median_wall_ms"] = a.no_timing ? 0.0 : s.median_wall_ms;
    summary.push_back(std::move(row));
  }
  if (!a.summary.empty()) {
    emit(a.summary, to_json_string(summary));
  } else if (!a.out.empty() && a.out != "-") {
    std::cout << to_json_string(summary);
  }
  return kOk;
}

// ---------------------------------------------------------------------------

struct CurveArgs {
  std::string v1, v2, out;
  int n = 1000;
};

int run_curve(const CurveArgs& a) {
  const Eigen::Vector3d v1 = parse_vec3(a.v1);
  const Eigen::Vector3d v2 = parse_vec3(a.v2);
  if (!(v1.norm() > 0.0) || !(v2.norm() > 0.0)) throw ZeroVector("--v1 and --v2 must be nonzero");
  const auto r = closed_geodesic_report(v1, v2, a.n);
  json j;
  j["v1"] = vec_json(v1);
  j["v2"] = vec_json(v2);
  j["n"] = a.n;
  j["l_plus"] = r.l_plus;
  j["l_minus"] = r.l_minus;
  j["geodesic"] = r.geodesic;
  j["sum_minus_pi"] = r.sum_minus_pi;
  emit(a.out, to_json_string(j));
  return kOk;
}

// ---------------------------------------------------------------------------

struct GenerateArgs {
  std::string kind = "l2l", out_dir = ".";
  std::size_t n_pairs = 20;
  double outlier_ratio = 0.0;
  double angular_noise = 0.0;
  double position_noise = 0.0;
  double pixel_noise = 0.0;
  std::uint64_t seed = 0;
  bool shuffle = false;
};

int run_generate(const GenerateArgs& a) {
  SceneConfig sc;
  sc.feature_kind = parse_feature_kind(a.kind);
  sc.n_pairs = a.n_pairs;
  sc.outlier_ratio = a.outlier_ratio;
  sc.angular_sigma = a.angular_noise;
  sc.noise_sigma = a.position_noise;
  sc.pixel_sigma = a.pixel_noise;
  sc.rng_seed = a.seed;
  const Scene scene = generate_scene(sc);

  std::vector<std::size_t> order(scene.pairs.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  if (a.shuffle) {
    std::mt19937_64 rng(a.seed ^ 0x9e3779b97f4a7c15ULL);
    std::shuffle(order.begin(), order.end(), rng);
  }
  std::vector<Feature> targets, sources(scene.pairs.size());
  IdPairs corr;
  for (std::size_t i = 0; i < scene.pairs.size(); ++i) {
    targets.push_back({"t" + std::to_string(i), scene.pairs[i].target});
    corr.emplace_back("t" + std::to_string(i), "s" + std::to_string(i));
  }
  for (std::size_t k = 0; k < order.size(); ++k) {
    const std::size_t i = order[k];
    sources[k] = {"s" + std::to_string(i), scene.pairs[i].source};
  }

  const std::filesystem::path dir(a.out_dir);
  std::filesystem::create_directories(dir);
  write_features((dir / "target.json").string(), targets);
  write_features((dir / "source.json").string(), sources);
  write_correspondences((dir / "corr.json").string(), corr);

  ResultFile truth;
  truth.rotation = scene.ground_truth.rotation3();
  truth.translation = scene.ground_truth.translation3();
  for (std::size_t i = 0; i < scene.pairs.size(); ++i) {
    if (scene.inlier_mask[i]) truth.inlier_ids.push_back(corr[i]);
  }
  write_text((dir / "truth.json").string(), to_json_string(result_to_json(truth)));
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Registration of lines and planes on the affine Grassmannian"};
  app.require_subcommand(1);

  RegisterArgs reg;
  auto* r = app.add_subcommand("register", "Estimate the rigid transform aligning source to target");
  r->add_option("--target", reg.target, "Target feature file")->required();
  r->add_option("--source", reg.source, "Source feature file")->required();
  r->add_option("--kind", reg.kind, "Pair kind")->check(CLI::IsMember({"l2l", "l2p", "p2p"}));
  auto* corr = r->add_option("--corr", reg.corr, "Correspondence file");
  auto* free = r->add_flag("--free", reg.free, "Search correspondences too");
  corr->excludes(free);
  free->excludes(corr);
  r->add_option("--eps-r", reg.eps_r, "Rotation inlier threshold, rad^2");
  r->add_option("--eps-t", reg.eps_t, "Translation search gap");
  r->add_option("--t-halfside", reg.t_halfside, "Half side of the translation search cube (0: auto)");
  r->add_option("--seed", reg.seed, "Random seed");
  r->add_option("--threads", reg.threads, "Worker threads");
  r->add_option("--out", reg.out, "Result file (default stdout)");
  r->add_flag("--no-timing", reg.no_timing, "Write zero wall times");

  BenchArgs bench;
  auto* b = app.add_subcommand("bench", "Synthetic outlier-ratio benchmark");
  b->add_option("--kind", bench.kind)->check(CLI::IsMember({"l2l", "l2p", "p2p"}));
  b->add_option("--ratios", bench.ratios, "Comma-separated outlier ratios");
  b->add_option("--repeats", bench.repeats);
  b->add_option("--seed", bench.seed);
  b->add_option("--n-pairs", bench.n_pairs);
  b->add_option("--eps-r", bench.eps_r);
  b->add_option("--eps-t", bench.eps_t);
  b->add_option("--angular-noise", bench.angular_noise, "Direction/normal tilt sigma, rad");
  b->add_option("--position-noise", bench.position_noise, "Anchor sigma, scene units");
  b->add_option("--pixel-noise", bench.pixel_noise, "Endpoint sigma for l2p, pixels");
  b->add_option("--threads", bench.threads);
  b->add_option("--out", bench.out, "CSV output (default stdout)");
  b->add_option("--summary", bench.summary, "JSON summary output");
  b->add_flag("--no-timing", bench.no_timing, "Write zero wall times");

  CurveArgs curve;
  auto* c = app.add_subcommand("curve", "Curve lengths between two 2D lines ax+by+c=0");
  c->add_option("--v1", curve.v1, "a,b,c")->required();
  c->add_option("--v2", curve.v2, "a,b,c")->required();
  c->add_option("--n", curve.n, "Samples");
  c->add_option("--out", curve.out);

  GenerateArgs gen;
  auto* g = app.add_subcommand("generate", "Write a synthetic fixture (target, source, corr, truth)");
  g->add_option("--kind", gen.kind)->check(CLI::IsMember({"l2l", "l2p", "p2p"}));
  g->add_option("--n-pairs", gen.n_pairs);
  g->add_option("--outlier-ratio", gen.outlier_ratio);
  g->add_option("--angular-noise", gen.angular_noise);
  g->add_option("--position-noise", gen.position_noise);
  g->add_option("--pixel-noise", gen.pixel_noise);
  g->add_option("--seed", gen.seed);
  g->add_option("--out-dir", gen.out_dir)->required();
  g->add_flag("--shuffle", gen.shuffle, "Shuffle the source file order");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*r) {
      if (!reg.free && reg.corr.empty()) throw ConfigError("register needs --corr FILE or --free");
      return run_register(reg);
    }
    if (*b) return run_bench(bench);
    if (*c) return run_curve(curve);
    if (*g) return run_generate(gen);
  } catch (const Error& e) {
    return report(e);
  } catch (const std::exception& e) {
    std::cerr << "error: Internal: " << e.what() << "\n";
    return kSolver;
  }
  return kUsage;
}
