// Copyright (c) 2026 The SwiftAttn Authors.
// SPDX-License-Identifier: Apache-2.0
//
// Command line frontend. Subcommands: paramcount, maccount, bench, selftest,
// gradcheck, weights. Exit codes: 0 success, 2 usage error, 3 threshold
// failure, 4 I/O error.

#include <cstdlib>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "swiftattn/bench.hpp"
#include "swiftattn/model.hpp"
#include "swiftattn/reference_targets.hpp"
#include "swiftattn/selftest.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;
constexpr int kExitThreshold = 3;
constexpr int kExitIo = 4;

using swiftattn::models::ModelSpec;

std::uint64_t default_seed() {
  if (const char* env = std::getenv("SWIFTATTN_SEED")) {
    return std::strtoull(env, nullptr, 10);
  }
  return 0;
}

/// Accepts xs, s, l1, l3 or custom:<spec-file>.
ModelSpec resolve_variant(const std::string& name) {
  if (auto spec = swiftattn::models::preset(name)) return *spec;
  const std::string prefix = "custom:";
  if (name.rfind(prefix, 0) == 0) {
    return swiftattn::models::parse_spec_file(name.substr(prefix.size()));
  }
  throw std::invalid_argument("unknown variant '" + name +
                              "' (expected xs, s, l1, l3 or custom:<spec-file>)");
}

bool is_preset(const std::string& name) {
  return swiftattn::models::preset(name).has_value();
}

std::string millions(std::uint64_t count) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(3) << double(count) / 1e6 << " M";
  return os.str();
}

void print_breakdown(const swiftattn::models::CountBreakdown& bd) {
  for (const auto& [name, value] : bd.parts) {
    std::cout << "  " << std::left << std::setw(14) << name << std::right << std::setw(12)
              << value << '\n';
  }
}

std::vector<std::size_t> parse_size_list_arg(const std::string& arg) {
  std::vector<std::size_t> out;
  std::istringstream is(arg);
  std::string item;
  while (std::getline(is, item, ',')) out.push_back(std::stoull(item));
  return out;
}

int cmd_paramcount(const std::string& variant, const std::string& head_override) {
  ModelSpec spec = resolve_variant(variant);
  if (head_override == "single") spec.head = swiftattn::models::HeadMode::single;
  if (head_override == "dual") spec.head = swiftattn::models::HeadMode::dual;

  ModelSpec other = spec;
  other.head = spec.head == swiftattn::models::HeadMode::dual
                   ? swiftattn::models::HeadMode::single
                   : swiftattn::models::HeadMode::dual;
  const auto counts = swiftattn::models::param_count(
      swiftattn::models::Model<float>::build(spec, default_seed()));
  const auto other_counts = swiftattn::models::param_count(
      swiftattn::models::Model<float>::build(other, default_seed()));
  const bool dual = spec.head == swiftattn::models::HeadMode::dual;
  const std::uint64_t total = counts.total();

  std::cout << "variant: " << spec.name << "\n";
  std::cout << "parameters (" << (dual ? "dual" : "single")
            << " head, as built): " << total << "  (" << millions(total) << ")\n";
  std::cout << "parameters (" << (dual ? "single" : "dual") << " head): " << other_counts.total()
            << "  (" << millions(other_counts.total()) << ")\n";

  int exit_code = kExitOk;
  if (auto target = swiftattn::targets::find(spec.name)) {
    const double want = target->params_millions * 1e6;
    const double delta = (double(total) - want) / want;
    const bool pass = std::abs(delta) <= swiftattn::targets::kParamTolerance;
    std::cout << "reference target: " << std::uint64_t(want) << "  ("
              << target->params_millions << " M)\n";
    std::cout << "delta: " << std::fixed << std::setprecision(2) << delta * 100 << " %  "
              << (pass ? "PASS" : "FAIL") << " (tolerance +-5 %)\n";
    if (!pass) exit_code = kExitThreshold;
  } else {
    std::cout << "reference target: none (custom spec)\n";
  }
  std::cout << "breakdown:\n";
  print_breakdown(counts);
  return exit_code;
}

int cmd_maccount(const std::string& variant, std::size_t input) {
  ModelSpec spec = resolve_variant(variant);
  const auto bd = swiftattn::models::mac_count(spec, input, input);
  const std::uint64_t total = bd.total();
  const std::uint64_t head = bd.part("head");

  std::cout << "variant: " << spec.name << "  input: " << input << "x" << input << "\n";
  std::cout << "macs (with head): " << total << "  (" << std::fixed << std::setprecision(4)
            << double(total) / 1e9 << " G)\n";
  std::cout << "macs (without head): " << total - head << "  (" << std::setprecision(4)
            << double(total - head) / 1e9 << " G)\n";

  int exit_code = kExitOk;
  if (auto target = swiftattn::targets::find(spec.name)) {
    if (input != 224) {
      std::cout << "reference target: defined at 224x224 only, not checked\n";
    } else {
      const double want = target->gmacs_at_224 * 1e9;
      const double delta = (double(total) - want) / want;
      const bool pass = std::abs(delta) <= swiftattn::targets::kMacTolerance;
      std::cout << "reference target: " << std::uint64_t(want) << "  (" << std::setprecision(1)
                << target->gmacs_at_224 << " G)\n";
      std::cout << "delta: " << std::setprecision(2) << delta * 100 << " %  "
                << (pass ? "PASS" : "FAIL") << " (tolerance +-10 %)\n";
      if (!pass) exit_code = kExitThreshold;
    }
  } else {
    std::cout << "reference target: none (custom spec)\n";
  }
  std::cout << "breakdown:\n";
  print_breakdown(bd);
  return exit_code;
}

int cmd_selftest(std::uint64_t seed, bool inject_fault) {
  const auto results = swiftattn::selftest::run_all({seed, inject_fault});
  for (const auto& suite : results) {
    std::cout << std::left << std::setw(28) << suite.name << " passed " << std::setw(4)
              << suite.passed << " failed " << suite.failed << '\n';
  }
  const bool ok = swiftattn::selftest::all_passed(results);
  std::cout << "selftest: " << (ok ? "PASS" : "FAIL") << " (" << results.size()
            << " suites)\n";
  return ok ? kExitOk : kExitThreshold;
}

int cmd_gradcheck(std::size_t cases, std::size_t max_n, std::size_t max_d,
                  std::uint64_t seed) {
  const auto report = swiftattn::selftest::gradient_check(cases, max_n, max_d, seed);
  std::cout << "gradient check: " << report.cases << " cases, " << report.entries
            << " entries, max relative error " << std::scientific << std::setprecision(3)
            << report.max_rel_error << '\n';
  const bool ok = report.max_rel_error < 1e-4;
  std::cout << "gradcheck: " << (ok ? "PASS" : "FAIL") << " (threshold 1e-4)\n";
  return ok ? kExitOk : kExitThreshold;
}

struct BenchArgs {
  std::string mode = "attention";
  std::string variants = "additive,standard,transpose,separable";
  std::string tokens = "256,512,1024,2048,4096,8192,16384";
  std::size_t dim = 64;
  std::size_t repeats = 7;
  std::size_t warmup = 3;
  std::uint64_t seed = 0;
  bool qkv = false;
  bool parallel_cells = false;
  bool fit = false;
  std::string model_variant = "xs";
  std::size_t input = 224;
  std::string fused = "both";
  std::string csv_path;
  std::string gnuplot_path;
};

int cmd_bench(const BenchArgs& args) {
  std::vector<swiftattn::bench::BenchRecord> records;

  if (args.mode == "attention") {
    swiftattn::bench::AttentionBenchOptions opts;
    opts.tokens = parse_size_list_arg(args.tokens);
    opts.dim = args.dim;
    opts.repeats = args.repeats;
    opts.warmup = args.warmup;
    opts.seed = args.seed;
    opts.parallel_cells = args.parallel_cells;
    std::istringstream is(args.variants);
    std::string name;
    while (std::getline(is, name, ',')) {
      bool qkv = false;
      std::string base = name;
      if (base == "additive_qkv") {
        base = "additive";
        qkv = true;
      }
      const auto variant = swiftattn::attention::parse_variant(base);
      if (!variant) throw std::invalid_argument("unknown attention variant '" + name + "'");
      opts.keep_value_path = qkv || (args.qkv && base == "additive");
      auto rows = swiftattn::bench::bench_attention(*variant, opts);
      if (args.fit) {
        const auto fit = swiftattn::bench::fit_scaling(rows);
        std::cout << "fit " << rows.front().variant << ": exponent " << std::fixed
                  << std::setprecision(3) << fit.exponent << "  r2 " << std::setprecision(4)
                  << fit.r_squared << '\n';
      }
      records.insert(records.end(), rows.begin(), rows.end());
    }
  } else if (args.mode == "model") {
    ModelSpec spec = resolve_variant(args.model_variant);
    swiftattn::bench::ModelBenchOptions opts;
    opts.input = args.input;
    opts.repeats = args.repeats;
    opts.warmup = args.warmup;
    opts.seed = args.seed;
    if (args.fused == "off" || args.fused == "both") {
      opts.fused = false;
      records.push_back(swiftattn::bench::bench_model(spec, opts));
    }
    if (args.fused == "on" || args.fused == "both") {
      opts.fused = true;
      records.push_back(swiftattn::bench::bench_model(spec, opts));
    }
  } else {
    throw std::invalid_argument("bench mode must be 'attention' or 'model'");
  }

  if (!args.csv_path.empty()) {
    swiftattn::bench::write_csv_file(records, args.csv_path);
  } else {
    swiftattn::bench::write_csv(records, std::cout);
  }
  if (!args.gnuplot_path.empty()) {
    swiftattn::bench::write_gnuplot_file(records, args.gnuplot_path);
  }
  return kExitOk;
}

struct WeightsArgs {
  std::string action;
  std::string variant = "xs";
  std::string path;
  std::string precision = "f32";
  bool precision_given = false;
  std::uint64_t seed = 0;
};

template <class T>
int weights_save(const ModelSpec& spec, const WeightsArgs& args) {
  auto model = swiftattn::models::Model<T>::build(spec, args.seed);
  swiftattn::models::save_weights(model.weights(), args.path,
                                  swiftattn::models::spec_hash(spec));
  std::cout << "saved " << model.weights().size() << " parameters to " << args.path << '\n';
  return kExitOk;
}

template <class T>
int weights_load(const ModelSpec& spec, const WeightsArgs& args) {
  auto loaded = swiftattn::models::load_weights<T>(args.path);
  auto model = swiftattn::models::Model<T>::build(spec, args.seed);
  model.load_weights(loaded.bundle);
  std::cout << "loaded " << loaded.bundle.size() << " parameters from " << args.path
            << " (spec hash " << std::hex << loaded.spec_hash << std::dec;
  std::cout << (loaded.spec_hash == swiftattn::models::spec_hash(spec) ? ", matches spec)"
                                                                       : ", differs from spec)")
            << '\n';
  return kExitOk;
}

int cmd_weights(const WeightsArgs& args) {
  if (args.action == "inspect") {
    const auto info = swiftattn::models::inspect_weights(args.path);
    std::cout << "format version " << info.version << ", spec hash " << std::hex
              << info.spec_hash << std::dec << ", " << info.entries.size() << " parameters\n";
    for (const auto& e : info.entries) {
      std::cout << "  " << std::left << std::setw(36) << e.name << ' '
                << swiftattn::shape_to_string(e.shape)
                << (e.dtype == swiftattn::Dtype::f32 ? " f32" : " f64") << '\n';
    }
    return kExitOk;
  }

  const ModelSpec spec = resolve_variant(args.variant);
  if (args.precision != "f32" && args.precision != "f64") {
    throw std::invalid_argument("precision must be f32 or f64");
  }
  if (args.action == "save") {
    return args.precision == "f32" ? weights_save<float>(spec, args)
                                   : weights_save<double>(spec, args);
  }
  if (args.action == "load") {
    std::string precision = args.precision;
    if (!args.precision_given) {
      // The file states its own precision; an explicit flag is a constraint.
      const auto info = swiftattn::models::inspect_weights(args.path);
      if (!info.entries.empty() && info.entries.front().dtype == swiftattn::Dtype::f64) {
        precision = "f64";
      }
    }
    WeightsArgs resolved = args;
    resolved.precision = precision;
    return precision == "f32" ? weights_load<float>(spec, resolved)
                              : weights_load<double>(spec, resolved);
  }
  throw std::invalid_argument("weights action must be save, load or inspect");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"SwiftFormer additive attention toolkit"};
  app.require_subcommand(1);

  std::string variant = "xs", head_override = "spec";
  auto* paramcount = app.add_subcommand("paramcount", "count parameters against the target");
  paramcount->add_option("--variant", variant, "xs, s, l1, l3 or custom:<spec-file>");
  paramcount->add_option("--head", head_override, "single, dual or spec default")
      ->check(CLI::IsMember({"single", "dual", "spec"}));

  std::size_t input = 224;
  auto* maccount = app.add_subcommand("maccount", "count MACs against the target");
  maccount->add_option("--variant", variant, "xs, s, l1, l3 or custom:<spec-file>");
  maccount->add_option("--input", input, "square input size, divisible by 32");

  std::uint64_t seed = default_seed();
  bool inject_fault = false;
  auto* selftest = app.add_subcommand("selftest", "run the property and oracle suites");
  selftest->add_option("--seed", seed, "rng seed");
  selftest->add_flag("--inject-fault", inject_fault,
                     "perturb a reference constant; the suites must then fail");

  std::size_t cases = 20, max_n = 8, max_d = 16;
  auto* gradcheck = app.add_subcommand("gradcheck", "finite-difference gradient verification");
  gradcheck->add_option("--cases", cases, "number of random cases");
  gradcheck->add_option("--max-n", max_n, "largest token count");
  gradcheck->add_option("--max-d", max_d, "largest embedding dim");
  gradcheck->add_option("--seed", seed, "rng seed");

  BenchArgs bench_args;
  bench_args.seed = default_seed();
  auto* bench = app.add_subcommand("bench", "timing sweeps with analytic MAC columns");
  bench->add_option("--mode", bench_args.mode, "attention or model");
  bench->add_option("--variants", bench_args.variants,
                    "comma list: additive, additive_qkv, standard, transpose, separable");
  bench->add_option("--n", bench_args.tokens, "comma list of token counts, ascending");
  bench->add_option("--d", bench_args.dim, "embedding dim");
  bench->add_option("--repeats", bench_args.repeats, "timed repeats per cell (>= 5)");
  bench->add_option("--warmup", bench_args.warmup, "warmup runs per cell");
  bench->add_option("--seed", bench_args.seed, "rng seed");
  bench->add_flag("--qkv", bench_args.qkv, "use the explicit value path for additive");
  bench->add_flag("--parallel-cells", bench_args.parallel_cells,
                  "run independent cells concurrently");
  bench->add_flag("--fit", bench_args.fit, "print the log-log scaling fit per variant");
  bench->add_option("--model-variant", bench_args.model_variant, "model mode: which variant");
  bench->add_option("--input", bench_args.input, "model mode: square input size");
  bench->add_option("--fused", bench_args.fused, "model mode: on, off or both")
      ->check(CLI::IsMember({"on", "off", "both"}));
  bench->add_option("--csv", bench_args.csv_path, "write CSV here instead of stdout");
  bench->add_option("--gnuplot", bench_args.gnuplot_path, "also write a gnuplot data file");

  WeightsArgs weights_args;
  weights_args.seed = default_seed();
  auto* weights = app.add_subcommand("weights", "save, load or inspect weight files");
  weights->add_option("action", weights_args.action, "save, load or inspect")->required();
  weights->add_option("--variant", weights_args.variant, "model variant");
  weights->add_option("--in", weights_args.path, "input path");
  weights->add_option("--out", weights_args.path, "output path");
  auto* precision_opt =
      weights->add_option("--precision", weights_args.precision,
                          "f32 or f64 (load infers from the file when omitted)");
  weights->add_option("--seed", weights_args.seed, "rng seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }
  weights_args.precision_given = precision_opt->count() > 0;

  try {
    if (*paramcount) return cmd_paramcount(variant, head_override);
    if (*maccount) return cmd_maccount(variant, input);
    if (*selftest) return cmd_selftest(seed, inject_fault);
    if (*gradcheck) return cmd_gradcheck(cases, max_n, max_d, seed);
    if (*bench) return cmd_bench(bench_args);
    if (*weights) return cmd_weights(weights_args);
  } catch (const swiftattn::models::IoError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitIo;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  }
  return kExitUsage;
}
