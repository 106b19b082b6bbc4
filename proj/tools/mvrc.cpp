#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cmath>
#include <fstream>
#include <iostream>
#include <mutex>
#include <optional>
#include <thread>

#include "mvr/codec.hpp"
#include "mvr/metrics.hpp"
#include "mvr/rate_control.hpp"
#include "mvr/sdc_motion.hpp"
#include "mvr/synthetic.hpp"

namespace {

using json = nlohmann::ordered_json;
namespace fs = std::filesystem;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitInfeasible = 3;

struct Size {
  int width = 0;
  int height = 0;
};

Size parse_size(const std::string& text) {
  const auto x = text.find('x');
  mvr::require(x != std::string::npos, mvr::ErrorKind::kUsage, "size must be WxH, got " + text);
  try {
    std::size_t a = 0, b = 0;
    Size s{std::stoi(text.substr(0, x), &a), std::stoi(text.substr(x + 1), &b)};
    if (a == x && b == text.size() - x - 1 && s.width > 0 && s.height > 0) return s;
  } catch (const std::exception&) {
  }
  mvr::fail(mvr::ErrorKind::kUsage, "size must be WxH, got " + text);
}

json number_or_inf(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return v;
}

void emit_json(const json& j, const std::string& path) {
  const std::string text = j.dump(2) + "\n";
  if (path.empty() || path == "-") {
    std::cout << text;
  } else {
    mvr::write_file_atomic(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()),
                                           text.size()));
  }
}

json read_json(const std::string& path) {
  const auto bytes = mvr::read_file_bytes(path);
  const bool blank = std::all_of(bytes.begin(), bytes.end(), [](std::uint8_t b) {
    return std::isspace(b) != 0;
  });
  mvr::require(!blank, mvr::ErrorKind::kUsage, path + " is empty");
  try {
    return json::parse(bytes.begin(), bytes.end());
  } catch (const json::exception& e) {
    mvr::fail(mvr::ErrorKind::kFormat, path + ": " + e.what());
  }
}

json encode_stats(const mvr::EncodeResult& r, std::size_t container_bytes, bool external_flow) {
  json j;
  j["width"] = r.container.width;
  j["height"] = r.container.height;
  j["q"] = r.container.quality;
  j["lambda"] = mvr::lambda_for_quality(r.container.quality);
  j["flow"] = external_flow ? "external" : "block-matching";
  j["rate_y_bits"] = r.rate_y_bits;
  j["rate_z_bits"] = r.rate_z_bits;
  j["estimated_payload_bytes"] = (r.rate_y_bits + r.rate_z_bits) / 8.0;
  j["y_bytes"] = r.container.y_bytes.size();
  j["z_bytes"] = r.container.z_bytes.size();
  j["payload_bytes"] = r.container.payload_bytes();
  j["container_bytes"] = container_bytes;
  j["msssim"] = r.msssim.score;
  j["msssim_scales"] = r.msssim.scales;
  j["msssim_reduced"] = r.msssim.reduced;
  j["psnr"] = number_or_inf(r.psnr);
  return j;
}

// ---- encode ----

struct EncodeArgs {
  std::string ref, target, size, weights, out, stats, flow;
  int ref_index = 0;
  int target_index = 0;
  std::optional<int> q;
  std::optional<std::uint64_t> auto_budget;
};

int run_encode(const EncodeArgs& a) {
  mvr::require(a.q.has_value() != a.auto_budget.has_value(), mvr::ErrorKind::kUsage,
               "give exactly one of --q and --auto-budget");
  const Size s = parse_size(a.size);
  const auto ref = mvr::read_yuv420_file(a.ref, s.width, s.height, a.ref_index);
  const auto target = mvr::read_yuv420_file(a.target, s.width, s.height, a.target_index);
  mvr::EncodeOptions options;
  if (!a.flow.empty()) options.flow = mvr::read_flo_file(a.flow);

  std::vector<int> levels;
  if (a.q) {
    levels.push_back(*a.q);
  } else {
    for (int q = 0; q < mvr::kQualityLevels; ++q) {
      if (fs::exists(mvr::weight_file(a.weights, q))) levels.push_back(q);
    }
    mvr::require(!levels.empty(), mvr::ErrorKind::kConfig, "no weight sets in " + a.weights);
  }

  std::vector<mvr::EncodeResult> results;
  std::vector<std::vector<std::uint8_t>> files;
  std::vector<mvr::ConfigPoint> table;
  for (int q : levels) {
    results.push_back(mvr::encode_frame(ref, target, mvr::load_quality(a.weights, q), options));
    files.push_back(mvr::serialize_container(results.back().container));
    table.push_back({q, files.back().size(), results.back().msssim.score});
  }
  std::size_t pick = 0;
  if (a.auto_budget) {
    const std::vector<std::vector<mvr::ConfigPoint>> tables{table};
    pick = static_cast<std::size_t>(mvr::allocate(tables, *a.auto_budget, 1).choice.front());
  }
  mvr::write_file_atomic(a.out, files[pick]);
  emit_json(encode_stats(results[pick], files[pick].size(), options.flow.has_value()), a.stats);
  return kExitOk;
}

// ---- decode ----

struct DecodeArgs {
  std::string input, ref, weights, out;
  int ref_index = 0;
};

int run_decode(const DecodeArgs& a) {
  const auto container = mvr::parse_container(mvr::read_file_bytes(a.input));
  const auto ref = mvr::read_yuv420_file(a.ref, container.width, container.height, a.ref_index);
  const auto weights = mvr::load_quality(a.weights, container.quality);
  const auto result = mvr::decode_frame(container, ref, weights);
  mvr::write_yuv420_file(a.out, mvr::downsample_444_to_420(result.recon));
  return kExitOk;
}

// ---- allocate ----

std::vector<std::vector<mvr::ConfigPoint>> parse_stats(const json& j) {
  mvr::require(j.is_array() && !j.empty(), mvr::ErrorKind::kUsage,
               "stats must be a non-empty array of frames");
  std::vector<std::vector<mvr::ConfigPoint>> tables;
  try {
    for (const auto& frame : j) {
      std::vector<mvr::ConfigPoint> t;
      for (const auto& c : frame.at("configs")) {
        t.push_back({c.at("q").get<int>(), c.at("rate_bytes").get<std::uint64_t>(),
                     c.at("msssim").get<double>()});
      }
      tables.push_back(std::move(t));
    }
  } catch (const json::exception& e) {
    mvr::fail(mvr::ErrorKind::kFormat, std::string("malformed stats: ") + e.what());
  }
  return tables;
}

json plan_json(const mvr::AllocationPlan& plan,
               const std::vector<std::vector<mvr::ConfigPoint>>& tables, std::uint64_t budget,
               std::uint64_t granularity) {
  json j;
  j["budget"] = budget;
  j["granularity"] = granularity;
  json frames = json::array();
  for (std::size_t i = 0; i < tables.size(); ++i) {
    const auto& c = tables[i][plan.choice[i]];
    frames.push_back({{"index", i}, {"q", c.q}, {"rate_bytes", c.rate}, {"msssim", c.msssim}});
  }
  j["frames"] = std::move(frames);
  j["total_rate"] = plan.total_rate;
  j["total_msssim"] = plan.total_msssim;
  return j;
}

int run_allocate(const std::string& stats, std::uint64_t budget, std::uint64_t granularity,
                 const std::string& out) {
  const auto tables = parse_stats(read_json(stats));
  const auto plan = mvr::allocate(tables, budget, granularity);
  emit_json(plan_json(plan, tables, budget, granularity), out);
  return kExitOk;
}

// ---- metrics ----

struct MetricsArgs {
  std::string a, b, size, out;
  int a_index = 0;
  int b_index = 0;
  bool subsampled = false;
};

int run_metrics(const MetricsArgs& m) {
  const Size s = parse_size(m.size);
  const auto fa = mvr::read_yuv420_file(m.a, s.width, s.height, m.a_index);
  const auto fb = mvr::read_yuv420_file(m.b, s.width, s.height, m.b_index);
  json j;
  if (m.subsampled) {
    j["psnr"] = number_or_inf(mvr::psnr(fa, fb));
    const auto ms = mvr::ms_ssim(fa, fb);
    j["msssim"] = ms.score;
    j["msssim_scales"] = ms.scales;
    j["msssim_reduced"] = ms.reduced;
  } else {
    const auto a444 = mvr::upsample_420_to_444(fa);
    const auto b444 = mvr::upsample_420_to_444(fb);
    j["psnr"] = number_or_inf(mvr::psnr(a444, b444));
    const auto ms = mvr::ms_ssim(a444, b444);
    j["msssim"] = ms.score;
    j["msssim_scales"] = ms.scales;
    j["msssim_reduced"] = ms.reduced;
  }
  j["sampling"] = m.subsampled ? "420" : "444";
  emit_json(j, m.out);
  return kExitOk;
}

// ---- init-weights ----

struct InitArgs {
  std::string out, arch = "default", arch_file;
  std::uint64_t seed = 0;
  bool f16 = false;
};

int run_init(const InitArgs& a) {
  mvr::ArchitectureConfig config;
  if (!a.arch_file.empty()) {
    const auto bytes = mvr::read_file_bytes(a.arch_file);
    config = mvr::ArchitectureConfig::parse(std::string(bytes.begin(), bytes.end()));
  } else if (a.arch == "compact") {
    config = mvr::ArchitectureConfig::compact();
  } else {
    mvr::require(a.arch == "default", mvr::ErrorKind::kUsage, "unknown --arch " + a.arch);
    config = mvr::ArchitectureConfig::default_config();
  }
  config.validate();
  fs::create_directories(a.out);
  const auto precision = a.f16 ? mvr::Precision::kF16 : mvr::Precision::kF32;
  for (int q = 0; q < mvr::kQualityLevels; ++q) {
    mvr::save_weights_file(mvr::weight_file(a.out, q),
                           mvr::generate_weights(config, a.seed, q, precision));
  }
  const std::string text = config.to_text();
  mvr::write_file_atomic(fs::path(a.out) / "arch.cfg",
                         std::span(reinterpret_cast<const std::uint8_t*>(text.data()),
                                   text.size()));
  return kExitOk;
}

// ---- profile ----

struct ProfileArgs {
  std::string video, size, weights, out;
  int jobs = 1;
};

int run_profile(const ProfileArgs& a) {
  const Size s = parse_size(a.size);
  const int frames = mvr::count_yuv420_frames(a.video, s.width, s.height);
  mvr::require(frames >= 2, mvr::ErrorKind::kUsage, "profile needs at least two frames");
  std::vector<mvr::ModelWeights> sets;
  for (int q = 0; q < mvr::kQualityLevels; ++q) {
    if (fs::exists(mvr::weight_file(a.weights, q))) sets.push_back(mvr::load_quality(a.weights, q));
  }
  mvr::require(!sets.empty(), mvr::ErrorKind::kConfig, "no weight sets in " + a.weights);

  // One table per P-frame (frame i predicted from frame i - 1); pairs are independent.
  std::vector<json> rows(static_cast<std::size_t>(frames - 1));
  std::atomic<int> next{1};
  std::mutex error_mutex;
  std::exception_ptr error;
  auto worker = [&] {
    for (int i = next++; i < frames; i = next++) {
      try {
        const auto ref = mvr::read_yuv420_file(a.video, s.width, s.height, i - 1);
        const auto target = mvr::read_yuv420_file(a.video, s.width, s.height, i);
        json configs = json::array();
        for (const auto& w : sets) {
          const auto r = mvr::encode_frame(ref, target, w);
          configs.push_back({{"q", w.quality},
                             {"rate_bytes", mvr::serialize_container(r.container).size()},
                             {"msssim", r.msssim.score}});
        }
        rows[i - 1] = {{"frame", i}, {"configs", std::move(configs)}};
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
        next = frames;
      }
    }
  };
  std::vector<std::thread> pool;
  for (int t = 0; t < std::max(1, a.jobs); ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
  emit_json(json(rows), a.out);
  return kExitOk;
}

// ---- synth ----

int run_synth(const std::string& size, std::uint64_t seed, int frames, const std::string& out) {
  const Size s = parse_size(size);
  mvr::require(frames >= 2, mvr::ErrorKind::kUsage, "need at least two frames");
  std::vector<std::uint8_t> bytes;
  // Each frame is the previous one moved under a fresh seeded motion.
  auto pair = mvr::synthetic_pair(s.width, s.height, seed);
  auto first = mvr::write_yuv420(pair.ref);
  bytes.insert(bytes.end(), first.begin(), first.end());
  for (int i = 1; i < frames; ++i) {
    if (i > 1) pair = mvr::synthetic_pair(s.width, s.height, seed + static_cast<std::uint64_t>(i));
    auto next = mvr::write_yuv420(pair.target);
    bytes.insert(bytes.end(), next.begin(), next.end());
  }
  mvr::write_file_atomic(out, bytes);
  return kExitOk;
}

int exit_code(mvr::ErrorKind kind) {
  switch (kind) {
    case mvr::ErrorKind::kUsage:
      return kExitUsage;
    case mvr::ErrorKind::kInfeasible:
      return kExitInfeasible;
    default:
      return kExitData;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"MV-Residual P-frame codec"};
  app.require_subcommand(1);

  EncodeArgs enc;
  auto* encode = app.add_subcommand("encode", "Code a target frame against a reference frame");
  encode->add_option("ref", enc.ref, "Reference frame, raw YUV 4:2:0")->required();
  encode->add_option("target", enc.target, "Target frame, raw YUV 4:2:0")->required();
  encode->add_option("--size", enc.size, "Frame size WxH")->required();
  encode->add_option("--weights", enc.weights, "Weight directory")->required();
  encode->add_option("-o,--output", enc.out, "Output .mvr file")->required();
  encode->add_option("--stats", enc.stats, "Stats JSON path (default stdout)");
  auto* q_opt = encode->add_option("--q", enc.q, "Quality index")->check(CLI::Range(0, 4));
  auto* budget_opt =
      encode->add_option("--auto-budget", enc.auto_budget, "Pick the best q within this many bytes");
  q_opt->excludes(budget_opt);
  encode->add_option("--flow", enc.flow, "External flow (.flo) instead of block matching");
  encode->add_option("--ref-index", enc.ref_index, "Frame index in the reference file");
  encode->add_option("--target-index", enc.target_index, "Frame index in the target file");

  DecodeArgs dec;
  auto* decode = app.add_subcommand("decode", "Reconstruct a coded frame");
  decode->add_option("input", dec.input, "Input .mvr file")->required();
  decode->add_option("ref", dec.ref, "Reference frame, raw YUV 4:2:0")->required();
  decode->add_option("--weights", dec.weights, "Weight directory")->required();
  decode->add_option("-o,--output", dec.out, "Output raw YUV 4:2:0")->required();
  decode->add_option("--ref-index", dec.ref_index, "Frame index in the reference file");

  std::string stats_path, plan_path;
  std::uint64_t budget = 0, granularity = mvr::kDefaultGranularity;
  auto* alloc = app.add_subcommand("allocate", "Distribute a byte budget over frames");
  alloc->add_option("stats", stats_path, "Per-frame stats JSON")->required();
  alloc->add_option("--budget", budget, "Total budget in bytes")->required();
  alloc->add_option("--granularity", granularity, "Rate bucket size in bytes")
      ->check(CLI::PositiveNumber);
  alloc->add_option("-o,--output", plan_path, "Plan JSON path (default stdout)");

  MetricsArgs met;
  auto* metrics = app.add_subcommand("metrics", "PSNR and MS-SSIM between two frames");
  metrics->add_option("a", met.a, "First raw YUV 4:2:0 file")->required();
  metrics->add_option("b", met.b, "Second raw YUV 4:2:0 file")->required();
  metrics->add_option("--size", met.size, "Frame size WxH")->required();
  metrics->add_option("--a-index", met.a_index, "Frame index in the first file");
  metrics->add_option("--b-index", met.b_index, "Frame index in the second file");
  metrics->add_flag("--420", met.subsampled, "Evaluate at 4:2:0 instead of 4:4:4");
  metrics->add_option("-o,--output", met.out, "JSON path (default stdout)");

  InitArgs init;
  auto* init_cmd = app.add_subcommand("init-weights", "Write seeded weight sets q0..q4");
  init_cmd->add_option("-o,--output", init.out, "Weight directory")->required();
  init_cmd->add_option("--seed", init.seed, "Random seed");
  init_cmd->add_option("--arch", init.arch, "default or compact")
      ->check(CLI::IsMember({"default", "compact"}));
  init_cmd->add_option("--arch-file", init.arch_file, "Architecture description file");
  init_cmd->add_flag("--f16", init.f16, "Store weights as binary16");

  ProfileArgs prof;
  auto* profile = app.add_subcommand("profile", "Per-q rate and MS-SSIM for every P-frame");
  profile->add_option("video", prof.video, "Raw YUV 4:2:0 sequence")->required();
  profile->add_option("--size", prof.size, "Frame size WxH")->required();
  profile->add_option("--weights", prof.weights, "Weight directory")->required();
  profile->add_option("-o,--output", prof.out, "Stats JSON path (default stdout)");
  profile->add_option("--jobs", prof.jobs, "Frame pairs coded in parallel")
      ->check(CLI::PositiveNumber);

  std::string synth_size, synth_out;
  std::uint64_t synth_seed = 0;
  int synth_frames = 2;
  auto* synth = app.add_subcommand("synth", "Write a seeded synthetic test sequence");
  synth->add_option("--size", synth_size, "Frame size WxH")->required();
  synth->add_option("--seed", synth_seed, "Random seed");
  synth->add_option("--frames", synth_frames, "Frame count");
  synth->add_option("-o,--output", synth_out, "Output raw YUV 4:2:0")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*encode) return run_encode(enc);
    if (*decode) return run_decode(dec);
    if (*alloc) return run_allocate(stats_path, budget, granularity, plan_path);
    if (*metrics) return run_metrics(met);
    if (*init_cmd) return run_init(init);
    if (*profile) return run_profile(prof);
    if (*synth) return run_synth(synth_size, synth_seed, synth_frames, synth_out);
  } catch (const mvr::Error& e) {
    std::cerr << "mvrc: " << e.what() << "\n";
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "mvrc: " << e.what() << "\n";
    return kExitData;
  }
  return kExitUsage;
}
