#include "cli.hpp"

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <future>
#include <iomanip>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

#include "CLI11.hpp"
#include "parafac/convops.hpp"
#include "parafac/error.hpp"
#include "parafac/lipnet.hpp"
#include "parafac/serialization.hpp"

namespace parafac::cli {

namespace fs = std::filesystem;

namespace {

struct GenConfig {
  std::string kind = "standard";
  int channels = 0;
  int in = 0;
  int out = 0;
  int rate = 1;
  int groups = 1;
  int degree = -1;
  int lo = 1;
  int hi = 1;
  std::string init = "uniform";
  bool reduced = false;
  int factor_cols = -1;
  std::string baseline = "none";
  int svcm_grid = 16;
  bool sidecar = false;
  std::string output;
};

struct VerifyConfig {
  std::string spec;
  int length = 256;
  int trials = 100;
  std::string dtype = "f64";
  bool oracle = false;
  std::string csv;
  std::string output;
};

struct OracleConfig {
  std::string spec;
  int length = 8;
  double tol = 1e-10;
};

struct ReportConfig {
  std::string dir;
  std::string format = "md";
  std::string output;
};

struct SweepConfig {
  int channels = 32;
  int length = 256;
  int trials = 100;
  int degree = 1;
  std::vector<std::string> dtypes{"f64"};
  std::string out_dir;
  std::string format = "md";
};

struct LipschitzConfig {
  std::string chain;
  int blocks = 10;
  int channels = 8;
  int length = 32;
  int trials = 1000;
};

struct MarginConfig {
  std::vector<double> logits;
  int label = 0;
  double lipschitz = 1.0;
};

std::string sci(double v, bool sign = false) {
  std::ostringstream os;
  if (sign) os << std::showpos;
  os << std::scientific << std::setprecision(2) << v;
  return os.str();
}

void emit(const std::string& text, const std::string& path, std::ostream& out) {
  if (path.empty() || path == "-") {
    out << text;
  } else {
    write_text_file(path, text);
  }
}

ConvSpec baseline_spec(const GenConfig& c, const ConvDesign& d, std::uint64_t seed) {
  if (d.kind != ConvKind::kStandard || d.groups != 1) {
    throw InvalidInput("baselines are defined for ungrouped standard convolutions only");
  }
  MatrixSeq f = gaussian_filter(d.out_channels, d.in_channels, d.lo, d.hi, seed);
  if (c.baseline == "svcm") {
    f = svcm_project(f, c.svcm_grid, false);
  } else if (c.baseline == "svcm-masked") {
    f = svcm_project(f, c.svcm_grid, true);
  } else if (c.baseline == "rko") {
    f = rko_project(f);
  } else {
    throw InvalidInput("unknown baseline '" + c.baseline + "' (expected none, svcm, svcm-masked or rko)");
  }
  return make_standard(std::move(f));
}

int cmd_gen(const GenConfig& c, std::uint64_t seed, std::ostream& out, std::ostream& err) {
  ConvDesign d;
  d.kind = parse_kind(c.kind);
  d.rate = d.kind == ConvKind::kStandard ? 1 : c.rate;
  if (d.kind == ConvKind::kStandard && c.rate != 1) {
    throw InvalidInput("standard convolution has rate 1; use --kind dilated for --rate " +
                       std::to_string(c.rate));
  }
  d.groups = c.groups;
  d.lo = c.degree >= 0 ? c.degree : c.lo;
  d.hi = c.degree >= 0 ? c.degree : c.hi;

  int s = c.in > 0 ? c.in : c.channels;
  int t = c.out;
  if (s <= 0 && t <= 0) throw InvalidInput("give --channels or --in/--out");
  if (t <= 0) {
    switch (d.kind) {
      case ConvKind::kStridedDown: t = s * d.rate; break;
      case ConvKind::kStridedUp:
        if (s % d.rate != 0) {
          throw InvalidInput("violated S = R * T: rate " + std::to_string(d.rate) +
                             " does not divide in_channels " + std::to_string(s));
        }
        t = s / d.rate;
        break;
      default: t = s;
    }
  }
  if (s <= 0) s = t;
  d.in_channels = s;
  d.out_channels = t;
  d.source.scheme = parse_init_scheme(c.init);
  d.source.seed = seed;
  d.source.reduced = c.reduced;
  d.source.factor_cols = c.factor_cols;

  const ConvSpec spec = c.baseline == "none" ? build_orthogonal(d) : baseline_spec(c, d, seed);

  Json j;
  if (c.sidecar) {
    if (c.output.empty() || c.output == "-") throw InvalidInput("--sidecar needs --output");
    const fs::path path(c.output);
    j = Json{{"kind", kind_name(spec.kind)}, {"rate", spec.rate}, {"groups", spec.groups}};
    j["filters"] = Json::array();
    for (int g = 0; g < spec.groups; ++g) {
      fs::path bin = path;
      bin.replace_extension("." + std::to_string(g) + ".bin");
      j["filters"].push_back(seq_to_json(spec.filters[g], bin));
    }
  } else {
    j = spec_to_json(spec);
  }
  emit(j.dump(2) + "\n", c.output, out);
  if (!c.output.empty() && c.output != "-") {
    err << "wrote " << kind_name(spec.kind) << " spec S=" << spec.in_channels()
        << " T=" << spec.out_channels() << " R=" << spec.rate << " G=" << spec.groups << " to "
        << c.output << "\n";
  }
  return kOk;
}

ConvSpec load_spec(const std::string& path) {
  if (path.empty()) throw InvalidInput("no spec file given");
  if (!fs::exists(path)) throw InvalidInput("spec file not found: " + path);
  return spec_from_json(read_json_file(path), fs::path(path).parent_path());
}

int cmd_verify(const VerifyConfig& c, std::uint64_t seed, std::ostream& out) {
  const ConvSpec spec = load_spec(c.spec);
  VerifyOptions opt;
  opt.length = c.length;
  opt.trials = c.trials;
  opt.seed = seed;
  opt.dtype = parse_dtype(c.dtype);
  opt.with_oracle = c.oracle;
  const OrthoReport rep = verify_orthogonality(spec, opt);
  emit(report_to_json(rep).dump(2) + "\n", c.output, out);
  if (!c.csv.empty()) write_text_file(c.csv, report_csv_header() + "\n" + report_csv_row(rep) + "\n");
  return rep.orthogonal ? kOk : kVerifyFailed;
}

int cmd_oracle(const OracleConfig& c, std::ostream& out) {
  const ConvSpec spec = load_spec(c.spec);
  const CirculantOracle o = circulant_oracle(spec, c.length);
  out << std::setprecision(17) << o.residual << "\n";
  return o.residual <= c.tol ? kOk : kVerifyFailed;
}

struct CellKey {
  int rate;
  int groups;
  auto operator<=>(const CellKey&) const = default;
};

std::string grid_table(const std::string& title, const std::string& row_prefix,
                       const std::map<CellKey, OrthoReport>& cells, const std::set<int>& groups) {
  std::set<int> rates;
  for (const auto& [k, r] : cells) rates.insert(k.rate);
  std::ostringstream os;
  os << "### " << title << "\n\n| |";
  for (int g : groups) os << " G=" << g << " |";
  os << "\n|---|";
  for (std::size_t i = 0; i < groups.size(); ++i) os << "---|";
  os << "\n";
  for (int r : rates) {
    os << "| " << row_prefix << r << " |";
    for (int g : groups) {
      const auto it = cells.find({r, g});
      if (it == cells.end()) {
        os << " N/A |";
      } else {
        os << " (" << sci(it->second.ratio_dev_mean, true) << " ± " << sci(it->second.ratio_dev_std)
           << ") |";
      }
    }
    os << "\n";
  }
  os << "\n";
  return os.str();
}

std::string render_report(const std::vector<OrthoReport>& reports, const std::string& format) {
  if (format == "csv") {
    std::vector<OrthoReport> sorted = reports;
    std::sort(sorted.begin(), sorted.end(), [](const OrthoReport& a, const OrthoReport& b) {
      return std::tuple(dtype_name(a.dtype), kind_name(a.kind), a.rate, a.groups) <
             std::tuple(dtype_name(b.dtype), kind_name(b.kind), b.rate, b.groups);
    });
    std::string text = report_csv_header() + "\n";
    for (const auto& r : sorted) text += report_csv_row(r) + "\n";
    return text;
  }
  if (format != "md") throw InvalidInput("unknown report format '" + format + "' (expected md or csv)");

  // f64 first, then f32.
  std::map<int, std::array<std::map<CellKey, OrthoReport>, 3>> by_dtype;
  for (const auto& r : reports) {
    const int dt = r.dtype == DType::kF64 ? 0 : 1;
    const int family = r.kind == ConvKind::kStridedDown ? 1 : r.kind == ConvKind::kStridedUp ? 2 : 0;
    by_dtype[dt][family][{r.rate, r.groups}] = r;
  }
  std::ostringstream os;
  os << "# Orthogonality of convolution variants\n\n"
     << "Cells: (mean ± std) of ||Conv(x)|| / ||x|| - 1 over Gaussian inputs. N/A: no orthogonal "
        "construction for that shape.\n\n";
  for (const auto& [dt, families] : by_dtype) {
    os << "## " << (dt == 0 ? "f64" : "f32") << "\n\n";
    // Shared columns, so an infeasible group count still shows up as N/A.
    std::set<int> groups;
    for (const auto& f : families)
      for (const auto& [k, r] : f) groups.insert(k.groups);
    if (!families[0].empty()) os << grid_table("Dilated", "R=", families[0], groups);
    if (!families[1].empty()) os << grid_table("Strided (down)", "↓", families[1], groups);
    if (!families[2].empty()) os << grid_table("Strided (up)", "↑", families[2], groups);
  }
  return os.str();
}

std::vector<OrthoReport> load_reports(const std::string& dir) {
  if (dir.empty() || !fs::is_directory(dir)) throw InvalidInput("report directory not found: " + dir);
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().extension() == ".json") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  std::vector<OrthoReport> reports;
  for (const auto& f : files) {
    const Json j = read_json_file(f);
    if (j.is_object() && j.contains("mean_dev")) reports.push_back(report_from_json(j));
  }
  if (reports.empty()) throw InvalidInput("no verify reports in " + dir);
  return reports;
}

int cmd_report(const ReportConfig& c, std::ostream& out) {
  emit(render_report(load_reports(c.dir), c.format), c.output, out);
  return kOk;
}

struct SweepCell {
  ConvDesign design;
  DType dtype;
};

int cmd_sweep(const SweepConfig& c, std::uint64_t seed, std::ostream& out, std::ostream& err) {
  std::vector<DType> dtypes;
  for (const auto& name : c.dtypes) dtypes.push_back(parse_dtype(name));

  std::vector<SweepCell> cells;
  auto add = [&](ConvKind kind, int rate, int groups, int s, int t) {
    ConvDesign d;
    d.kind = kind;
    d.rate = rate;
    d.groups = groups;
    d.in_channels = s;
    d.out_channels = t;
    d.lo = c.degree;
    d.hi = c.degree;
    d.source.seed = derive_seed(seed, cells.size());
    try {
      check_feasible(d);
    } catch (const InvalidInput& e) {
      err << "N/A " << kind_name(kind) << " R=" << rate << " G=" << groups << ": " << e.what() << "\n";
      return;
    }
    for (DType dt : dtypes) cells.push_back({d, dt});
  };
  for (int r : {1, 2, 4})
    for (int g : {1, 4, 16}) add(ConvKind::kDilated, r, g, c.channels, c.channels);
  for (int r : {2, 4})
    for (int g : {1, 4, 16}) add(ConvKind::kStridedDown, r, g, c.channels, c.channels * r);
  for (int r : {2, 4}) {
    for (int g : {1, 4, 16}) {
      if (c.channels % r != 0) {
        err << "N/A strided_up R=" << r << " G=" << g << ": violated S = R * T: rate " << r
            << " does not divide " << c.channels << "\n";
        continue;
      }
      add(ConvKind::kStridedUp, r, g, c.channels, c.channels / r);
    }
  }

  std::vector<std::future<OrthoReport>> jobs;
  for (const auto& cell : cells) {
    jobs.push_back(std::async(std::launch::async, [&c, &cell, seed] {
      VerifyOptions opt;
      opt.length = c.length;
      opt.trials = c.trials;
      opt.seed = seed;
      opt.dtype = cell.dtype;
      return verify_orthogonality(build_orthogonal(cell.design), opt);
    }));
  }
  std::vector<OrthoReport> reports;
  for (auto& j : jobs) reports.push_back(j.get());

  if (!c.out_dir.empty()) {
    fs::create_directories(c.out_dir);
    for (const auto& r : reports) {
      const std::string name = std::string(kind_name(r.kind)) + "_R" + std::to_string(r.rate) + "_G" +
                               std::to_string(r.groups) + "_" + std::string(dtype_name(r.dtype)) +
                               ".json";
      write_text_file(fs::path(c.out_dir) / name, report_to_json(r).dump(2) + "\n");
    }
  }
  out << render_report(reports, c.format);
  const bool all_ok = std::all_of(reports.begin(), reports.end(), [](const OrthoReport& r) { return r.orthogonal; });
  return all_ok ? kOk : kVerifyFailed;
}

int cmd_lipschitz(const LipschitzConfig& c, std::uint64_t seed, std::ostream& out) {
  Chain chain;
  int channels = c.channels;
  if (!c.chain.empty()) {
    if (!fs::exists(c.chain)) throw InvalidInput("chain file not found: " + c.chain);
    chain = chain_from_json(read_json_file(c.chain), fs::path(c.chain).parent_path());
  } else {
    chain = make_additive_chain(c.blocks, c.channels, seed);
  }
  ProbeOptions opt;
  opt.channels = channels;
  opt.length = c.length;
  opt.trials = c.trials;
  opt.seed = derive_seed(seed, 0xc0ffee);
  const double l = empirical_lipschitz(chain, opt);
  constexpr double kBound = 1.0 + 1e-9;
  Json j{{"layers", chain.size()}, {"trials", c.trials}, {"empirical_lipschitz", l}, {"bound", kBound},
         {"within_bound", l <= kBound}};
  out << j.dump(2) << "\n";
  return l <= kBound ? kOk : kVerifyFailed;
}

int cmd_margin(const MarginConfig& c, std::ostream& out) {
  const MarginResult r = margin_and_radius(c.logits, c.label, c.lipschitz);
  Json j{{"label", r.label}, {"margin", r.margin}, {"certified_radius", r.certified_radius}};
  out << j.dump(2) << "\n";
  return kOk;
}

std::uint64_t resolve_seed(std::uint64_t flag) {
  const char* env = std::getenv("PARAFAC_SEED");
  if (env == nullptr || *env == '\0') return flag;
  try {
    std::size_t used = 0;
    const unsigned long long v = std::stoull(env, &used, 0);
    if (used != std::string_view(env).size()) throw std::invalid_argument(env);
    return v;
  } catch (const std::exception&) {
    throw InvalidInput(std::string("PARAFAC_SEED is not an unsigned integer: '") + env + "'");
  }
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Orthogonal convolutions from paraunitary systems"};
  app.name("parafac");
  app.require_subcommand(1);
  app.fallthrough();
  std::uint64_t seed = 0;
  app.add_option("--seed", seed, "Base RNG seed (PARAFAC_SEED overrides)");

  GenConfig gen;
  auto* g = app.add_subcommand("gen", "Generate an orthogonal convolution spec");
  g->add_option("--kind", gen.kind, "standard, dilated, strided_down, strided_up or group")->capture_default_str();
  g->add_option("--channels", gen.channels, "Input channels (output channels follow from kind and rate)");
  g->add_option("--in", gen.in, "Input channels S");
  g->add_option("--out", gen.out, "Output channels T");
  g->add_option("--rate", gen.rate, "Dilation or stride R")->capture_default_str();
  g->add_option("--groups", gen.groups, "Groups G")->capture_default_str();
  g->add_option("--degree", gen.degree, "Sets both --lo and --hi");
  g->add_option("--lo", gen.lo, "Anticausal degree")->capture_default_str();
  g->add_option("--hi", gen.hi, "Causal degree")->capture_default_str();
  g->add_option("--init", gen.init, "identity, permutation, uniform or torus")->capture_default_str();
  g->add_flag("--reduced", gen.reduced, "Reduced initialization: the filter equals Q");
  g->add_option("--factor-cols", gen.factor_cols, "Columns of each U (default channels / 2)");
  g->add_option("--baseline", gen.baseline, "none, svcm, svcm-masked or rko (Gaussian start)")->capture_default_str();
  g->add_option("--svcm-grid", gen.svcm_grid, "Frequency grid of the svcm baselines")->capture_default_str();
  g->add_flag("--sidecar", gen.sidecar, "Store taps in .bin files next to the output");
  g->add_option("-o,--output", gen.output, "Output file (default stdout)");

  VerifyConfig ver;
  auto* v = app.add_subcommand("verify", "Measure orthogonality with Gaussian inputs");
  v->add_option("spec,--spec", ver.spec, "Spec file")->required();
  v->add_option("-n,--length", ver.length, "Signal length N")->capture_default_str();
  v->add_option("--trials", ver.trials, "Gaussian trials")->capture_default_str();
  v->add_option("--dtype", ver.dtype, "f64 or f32")->capture_default_str();
  v->add_flag("--oracle", ver.oracle, "Also build the dense circulant operator");
  v->add_option("--csv", ver.csv, "Also write a CSV row here");
  v->add_option("-o,--output", ver.output, "JSON output file (default stdout)");

  OracleConfig orc;
  auto* o = app.add_subcommand("oracle", "Print ||C^T C - I||_max of the dense circulant operator");
  o->add_option("spec,--spec", orc.spec, "Spec file")->required();
  o->add_option("-n,--length", orc.length, "Signal length N")->capture_default_str();
  o->add_option("--tol", orc.tol, "Exit 0 iff the residual is at most this")->capture_default_str();

  ReportConfig rep;
  auto* r = app.add_subcommand("report", "Tabulate a directory of verify reports");
  r->add_option("dir,--dir", rep.dir, "Directory of verify JSON files")->required();
  r->add_option("--format", rep.format, "md or csv")->capture_default_str();
  r->add_option("-o,--output", rep.output, "Output file (default stdout)");

  SweepConfig sw;
  auto* s = app.add_subcommand("sweep", "Verify the default grid of dilated and strided variants");
  s->add_option("--channels", sw.channels, "Input channels S")->capture_default_str();
  s->add_option("-n,--length", sw.length, "Signal length N")->capture_default_str();
  s->add_option("--trials", sw.trials, "Gaussian trials per cell")->capture_default_str();
  s->add_option("--degree", sw.degree, "Degree on each side")->capture_default_str();
  s->add_option("--dtype", sw.dtypes, "f64 and/or f32")->delimiter(',')->capture_default_str();
  s->add_option("--out-dir", sw.out_dir, "Write one verify report per cell here");
  s->add_option("--format", sw.format, "md or csv")->capture_default_str();

  LipschitzConfig lip;
  auto* l = app.add_subcommand("lipschitz", "Probe the Lipschitz ratio of a chain");
  l->add_option("--chain", lip.chain, "Chain JSON (default: generated additive chain)");
  l->add_option("--blocks", lip.blocks, "Blocks of the generated chain")->capture_default_str();
  l->add_option("--channels", lip.channels, "Channels")->capture_default_str();
  l->add_option("-n,--length", lip.length, "Signal length")->capture_default_str();
  l->add_option("--trials", lip.trials, "Random pairs")->capture_default_str();

  MarginConfig mar;
  auto* m = app.add_subcommand("margin", "Output margin and certified radius of a logit vector");
  m->add_option("--logits", mar.logits, "Logits, comma separated")->delimiter(',')->required();
  m->add_option("--label", mar.label, "Class index")->capture_default_str();
  m->add_option("--lipschitz", mar.lipschitz, "Lipschitz constant L")->capture_default_str();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kInvalid;
  }

  try {
    const std::uint64_t base = resolve_seed(seed);
    if (*g) return cmd_gen(gen, base, out, err);
    if (*v) return cmd_verify(ver, base, out);
    if (*o) return cmd_oracle(orc, out);
    if (*r) return cmd_report(rep, out);
    if (*s) return cmd_sweep(sw, base, out, err);
    if (*l) return cmd_lipschitz(lip, base, out);
    if (*m) return cmd_margin(mar, out);
  } catch (const ResourceError& e) {
    err << "error: " << e.what() << "\n";
    return kResource;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kInvalid;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return kInvalid;
}

int run(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return run(args, std::cout, std::cerr);
}

}  // namespace parafac::cli
