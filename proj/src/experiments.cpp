#include "bmb/experiments.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <initializer_list>
#include <json.hpp>
#include <limits>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string_view>
#include <utility>

#include "bmb/exact.hpp"
#include "bmb/rng.hpp"
#include "bmb/state_samplers.hpp"

namespace bmb {

namespace {

std::uint64_t fnv1a64(std::string_view text) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

std::string hex16(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

// Full-precision doubles for data files (byte-identical reruns), shorter
// form for plot coordinates.
std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string fmt6(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

void write_file(const std::filesystem::path& path, const std::string& content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path.string());
  out << content;
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open: " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::string stamp(const std::string& hash, std::uint64_t seed) {
  return "# config=" + hash + " seed=" + std::to_string(seed) + "\n";
}

std::string trimmed(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) fields.push_back(trimmed(field));
  if (!line.empty() && line.back() == ',') fields.push_back("");
  return fields;
}

bool parse_number(const std::string& s, double& out) {
  std::size_t used = 0;
  try {
    out = std::stod(s, &used);
  } catch (const std::exception&) {
    return false;
  }
  return used == s.size();
}

const std::map<std::string, ExperimentKind>& kind_names() {
  static const std::map<std::string, ExperimentKind> names = {
      {"heart", ExperimentKind::Heart},
      {"synthetic", ExperimentKind::Synthetic},
      {"semisup", ExperimentKind::Semisup},
      {"flawed-joint-demo", ExperimentKind::FlawedJointDemo},
      {"custom", ExperimentKind::Custom},
  };
  return names;
}

std::string kind_to_string(ExperimentKind kind) {
  for (const auto& [name, k] : kind_names())
    if (k == kind) return name;
  throw std::invalid_argument("unknown experiment kind");
}

void check_keys(const nlohmann::json& j, std::initializer_list<std::string_view> allowed,
                const std::string& where) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (std::find(allowed.begin(), allowed.end(), it.key()) == allowed.end())
      throw std::invalid_argument("config: unknown key \"" + it.key() + "\" in " + where);
  }
}

void validate_config(const ExperimentConfig& c) {
  static const std::set<std::string> methods = {"metropolis", "ratio", "langevin"};
  static const std::set<std::string> approximators = {"exact", "mean-field", "tree", "bethe"};
  if (!methods.count(c.method)) throw std::invalid_argument("config: unknown method " + c.method);
  if (!approximators.count(c.approximator))
    throw std::invalid_argument("config: unknown approximator " + c.approximator);
  if (c.iterations < 1) throw std::invalid_argument("config: iterations must be positive");
  if (c.thinning < 1 || c.thinning > c.iterations)
    throw std::invalid_argument("config: thinning must be in [1, iterations]");
  if (!(c.proposal_std > 0.0) || !std::isfinite(c.proposal_std))
    throw std::invalid_argument("config: proposal_std must be positive");
  if (!(c.epsilon > 0.0) || !std::isfinite(c.epsilon))
    throw std::invalid_argument("config: epsilon must be positive");
  if (c.bins < 2) throw std::invalid_argument("config: bins must be at least 2");
  if (!(c.bp_flag_fraction >= 0.0 && c.bp_flag_fraction <= 1.0))
    throw std::invalid_argument("config: bp_flag_fraction must lie in [0, 1]");
  if (c.out_dir.empty()) throw std::invalid_argument("config: out_dir must not be empty");
  if (c.synthetic.k < 1) throw std::invalid_argument("config: synthetic.k must be positive");
  const std::int64_t max_edges =
      static_cast<std::int64_t>(c.synthetic.k) * (c.synthetic.k - 1) / 2;
  if (c.synthetic.n_edges < 0 || c.synthetic.n_edges > max_edges)
    throw std::invalid_argument("config: synthetic.n_edges out of range");
  if (!(c.semisup.epsilon > 0.0) || !std::isfinite(c.semisup.epsilon))
    throw std::invalid_argument("config: semisup.epsilon must be positive");
  if (c.semisup.n_sweeps < 1 || c.semisup.predict_sweeps < 1 || c.semisup.predict_sigmas < 1)
    throw std::invalid_argument("config: semisup sweep counts must be positive");
  if (c.semisup.predict_burn_in < 0)
    throw std::invalid_argument("config: semisup.predict_burn_in must be non-negative");
  if (c.flawed.n_values.empty())
    throw std::invalid_argument("config: flawed.n_values must not be empty");
  for (std::int64_t n : c.flawed.n_values)
    if (n < 0) throw std::invalid_argument("config: flawed.n_values must be non-negative");
  if (!(c.flawed.grid_lo < c.flawed.grid_hi))
    throw std::invalid_argument("config: flawed grid bounds must be ordered");
  if (c.flawed.grid_points < 2)
    throw std::invalid_argument("config: flawed.grid_points must be at least 2");
}

std::vector<double> linspace(double lo, double hi, int points) {
  std::vector<double> out(static_cast<std::size_t>(points));
  for (int i = 0; i < points; ++i)
    out[i] = lo + (hi - lo) * static_cast<double>(i) / (points - 1);
  return out;
}

std::vector<double> coord_column(const Chain& chain, std::size_t coord) {
  std::vector<double> out;
  out.reserve(chain.samples.size());
  for (const auto& sample : chain.samples) out.push_back(sample[coord]);
  return out;
}

double median_of(std::vector<double> values) {
  if (values.empty()) throw std::invalid_argument("median of empty set");
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

double unbiased_variance(const std::vector<double>& values) {
  if (values.size() < 2) return 0.0;
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= static_cast<double>(values.size());
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  return ss / static_cast<double>(values.size() - 1);
}

// Normalized bin masses of values over [lo, hi]; used for shared-range
// overlay plots where every chain is binned identically.
std::vector<double> range_masses(const std::vector<double>& values, double lo, double hi,
                                 int bins) {
  std::vector<double> masses(static_cast<std::size_t>(bins), 0.0);
  if (values.empty()) return masses;
  const double width = (hi - lo) / bins;
  for (double v : values) {
    auto idx = static_cast<std::int64_t>((v - lo) / width);
    idx = std::clamp<std::int64_t>(idx, 0, bins - 1);
    masses[static_cast<std::size_t>(idx)] += 1.0;
  }
  for (double& m : masses) m /= static_cast<double>(values.size());
  return masses;
}

constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c",
                                    "#9467bd", "#ff7f0e", "#8c564b"};
constexpr int kPaletteSize = 6;

struct SvgCurve {
  std::string label;
  std::vector<std::pair<double, double>> points;
};

std::string line_chart_svg(std::span<const SvgCurve> curves, std::span<const double> markers,
                           const std::string& title) {
  constexpr double width = 640.0, height = 400.0;
  constexpr double ml = 60.0, mr = 16.0, mt = 30.0, mb = 40.0;

  double xlo = std::numeric_limits<double>::infinity(), xhi = -xlo;
  double ylo = 0.0, yhi = -std::numeric_limits<double>::infinity();
  for (const SvgCurve& c : curves) {
    for (const auto& [x, y] : c.points) {
      xlo = std::min(xlo, x);
      xhi = std::max(xhi, x);
      ylo = std::min(ylo, y);
      yhi = std::max(yhi, y);
    }
  }
  for (double m : markers) {
    xlo = std::min(xlo, m);
    xhi = std::max(xhi, m);
  }
  if (!(xlo < xhi)) {
    xlo -= 0.5;
    xhi += 0.5;
  }
  if (!(ylo < yhi)) yhi = ylo + 1.0;

  const auto px = [&](double x) { return ml + (x - xlo) / (xhi - xlo) * (width - ml - mr); };
  const auto py = [&](double y) {
    return height - mb - (y - ylo) / (yhi - ylo) * (height - mt - mb);
  };

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\""
      << height << "\" viewBox=\"0 0 " << width << " " << height << "\">\n";
  svg << "<rect width=\"" << width << "\" height=\"" << height << "\" fill=\"#ffffff\"/>\n";
  if (!title.empty())
    svg << "<text x=\"" << fmt6(width / 2) << "\" y=\"20\" font-family=\"sans-serif\" "
        << "font-size=\"14\" text-anchor=\"middle\">" << title << "</text>\n";

  svg << "<line x1=\"" << fmt6(ml) << "\" y1=\"" << fmt6(height - mb) << "\" x2=\""
      << fmt6(width - mr) << "\" y2=\"" << fmt6(height - mb)
      << "\" stroke=\"#333333\" stroke-width=\"1\"/>\n";
  svg << "<line x1=\"" << fmt6(ml) << "\" y1=\"" << fmt6(mt) << "\" x2=\"" << fmt6(ml)
      << "\" y2=\"" << fmt6(height - mb) << "\" stroke=\"#333333\" stroke-width=\"1\"/>\n";
  svg << "<text x=\"" << fmt6(ml) << "\" y=\"" << fmt6(height - mb + 16)
      << "\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"middle\">" << fmt6(xlo)
      << "</text>\n";
  svg << "<text x=\"" << fmt6(width - mr) << "\" y=\"" << fmt6(height - mb + 16)
      << "\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"middle\">" << fmt6(xhi)
      << "</text>\n";
  svg << "<text x=\"" << fmt6(ml - 6) << "\" y=\"" << fmt6(height - mb)
      << "\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"end\">" << fmt6(ylo)
      << "</text>\n";
  svg << "<text x=\"" << fmt6(ml - 6) << "\" y=\"" << fmt6(mt + 4)
      << "\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"end\">" << fmt6(yhi)
      << "</text>\n";

  for (double m : markers) {
    svg << "<line x1=\"" << fmt6(px(m)) << "\" y1=\"" << fmt6(mt) << "\" x2=\"" << fmt6(px(m))
        << "\" y2=\"" << fmt6(height - mb)
        << "\" stroke=\"#555555\" stroke-width=\"1\" stroke-dasharray=\"4 3\"/>\n";
  }

  for (std::size_t i = 0; i < curves.size(); ++i) {
    svg << "<polyline fill=\"none\" stroke=\"" << kPalette[i % kPaletteSize]
        << "\" stroke-width=\"1.5\" points=\"";
    bool first = true;
    for (const auto& [x, y] : curves[i].points) {
      if (!first) svg << " ";
      svg << fmt6(px(x)) << "," << fmt6(py(y));
      first = false;
    }
    svg << "\"/>\n";
  }

  for (std::size_t i = 0; i < curves.size(); ++i) {
    svg << "<text x=\"" << fmt6(ml + 10) << "\" y=\"" << fmt6(mt + 16 + 15 * static_cast<double>(i))
        << "\" font-family=\"sans-serif\" font-size=\"12\" fill=\""
        << kPalette[i % kPaletteSize] << "\">" << curves[i].label << "</text>\n";
  }

  svg << "</svg>\n";
  return svg.str();
}

std::unique_ptr<LogZApproximator> make_approximator(const std::string& name) {
  if (name == "exact") return make_exact_logz();
  if (name == "mean-field") return make_mean_field_logz();
  if (name == "tree") {
    // The bound is re-optimized at every proposal; a coarser ascent floor
    // keeps the chain affordable and costs ~1e-6 nats of tightness.
    TreeBoundOptions opts;
    opts.step_floor = 1e-3;
    return make_tree_logz(opts);
  }
  if (name == "bethe") return make_bethe_logz();
  throw std::invalid_argument("unknown approximator: " + name);
}

ChainReport report_chain(const std::string& name, const Chain& chain,
                         const ExperimentConfig& config) {
  ChainReport report;
  report.name = name;
  report.method = chain.method;
  report.accept_rate = chain.propose_count > 0 ? static_cast<double>(chain.accept_count) /
                                                     static_cast<double>(chain.propose_count)
                                               : 1.0;
  report.nonconverged_fraction = static_cast<double>(chain.nonconverged_steps) /
                                 static_cast<double>(config.iterations + 1);
  report.flagged = report.nonconverged_fraction > config.bp_flag_fraction;
  return report;
}

nlohmann::json report_json(const ChainReport& report) {
  return {{"name", report.name},
          {"method", report.method},
          {"accept_rate", report.accept_rate},
          {"nonconverged_fraction", report.nonconverged_fraction},
          {"flagged", report.flagged}};
}

void write_chain_file(const std::filesystem::path& path, const std::string& hash,
                      const Chain& chain) {
  const nlohmann::json meta = {{"config", hash}, {"seed", chain.seed}};
  write_file(path, meta.dump() + "\n" + chain_to_jsonl(chain));
}

std::string histogram_table_csv(const HistogramTable& table, const std::string& hash,
                                std::uint64_t seed) {
  std::string csv = stamp(hash, seed);
  csv += "coord,bin_lo,bin_hi,count\n";
  for (std::size_t c = 0; c < table.counts.size(); ++c) {
    const std::string name = table.layout.coord_name(c);
    for (std::size_t b = 0; b < table.counts[c].size(); ++b) {
      csv += name + "," + fmt(table.bin_edges[c][b]) + "," + fmt(table.bin_edges[c][b + 1]) +
             "," + std::to_string(table.counts[c][b]) + "\n";
    }
  }
  return csv;
}

// Shared-range overlay of one coordinate across several chains, plus
// optional truth markers.
std::string coord_overlay_svg(const std::vector<const Chain*>& chains,
                              const std::vector<std::string>& labels, std::size_t coord,
                              int bins, std::span<const double> markers,
                              const std::string& title) {
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (const Chain* chain : chains) {
    for (const auto& sample : chain->samples) {
      lo = std::min(lo, sample[coord]);
      hi = std::max(hi, sample[coord]);
    }
  }
  for (double m : markers) {
    lo = std::min(lo, m);
    hi = std::max(hi, m);
  }
  if (!(lo < hi)) {
    lo -= 0.5;
    hi += 0.5;
  }
  std::vector<HistogramCurve> curves;
  const std::vector<double> edges = linspace(lo, hi, bins + 1);
  for (std::size_t i = 0; i < chains.size(); ++i) {
    HistogramCurve curve;
    curve.label = labels[i];
    curve.bin_edges = edges;
    curve.masses = range_masses(coord_column(*chains[i], coord), lo, hi, bins);
    curves.push_back(std::move(curve));
  }
  return emit_histogram_svg(curves, markers, title);
}

nlohmann::json manifest_base(const ExperimentConfig& config, const std::string& hash) {
  return {{"config", nlohmann::json::parse(config_to_json(config))},
          {"config_hash", hash},
          {"seed", config.seed},
          {"versions", {{"bmb", "0.1.0"}, {"cxx_standard", 20}}},
          {"substitutions", nlohmann::json::array()}};
}

void write_manifest(const std::filesystem::path& out_dir, const nlohmann::json& manifest) {
  write_file(out_dir / "run.json", manifest.dump(2) + "\n");
}

// Plug-in Metropolis over (log sigma_x, log sigma_y) with Bethe-approximated
// normalizers on both the full and the clamped agreement model; the paper's
// comparison chain that concentrates in the wrong place.
SigmaChain loopy_sigma_chain(const PointSet& points, const ExperimentConfig& config,
                             std::uint64_t seed, double& accept_rate,
                             double& nonconverged_fraction) {
  auto logz_full = make_bethe_logz();
  auto logz_clamped = make_bethe_logz();
  bool any_hidden = false;
  for (std::int8_t l : points.labels)
    if (l == kHidden) any_hidden = true;

  const auto loglik = [&](const SigmaParams& sigma, bool& converged) {
    const SemisupBm bm = semisup_to_bm(points, sigma);
    const auto full = logz_full->evaluate(bm.model);
    double log_zx;
    bool clamped_converged = true;
    if (any_hidden) {
      const auto [reduced, constant] = fold_observed(bm.model, bm.designation);
      const auto value = logz_clamped->evaluate(reduced);
      log_zx = constant + value.log_z;
      clamped_converged = value.converged;
    } else {
      log_zx = clamped_logZx(bm.model, bm.designation);
    }
    converged = full.converged && clamped_converged;
    return log_zx - full.log_z;
  };

  const SigmaChainConfig box_defaults;
  Rng rng = make_rng(seed);
  SigmaParams current;
  bool converged = true;
  double current_ll = loglik(current, converged);
  std::int64_t nonconverged = converged ? 0 : 1;
  std::int64_t accepted = 0;

  SigmaChain chain;
  chain.seed = seed;
  chain.epsilon = config.proposal_std;
  chain.samples.reserve(static_cast<std::size_t>(config.iterations));
  for (std::int64_t it = 0; it < config.iterations; ++it) {
    SigmaParams proposed = current;
    double& coord = it % 2 == 0 ? proposed.log_sigma_x : proposed.log_sigma_y;
    coord += config.proposal_std * normal01(rng);
    const bool inside = coord >= box_defaults.box_lo && coord <= box_defaults.box_hi;
    if (inside) {
      bool prop_converged = true;
      const double proposed_ll = loglik(proposed, prop_converged);
      if (!prop_converged) ++nonconverged;
      const double u = uniform01(rng);
      if (u <= 0.0 || std::log(u) < proposed_ll - current_ll) {
        current = proposed;
        current_ll = proposed_ll;
        ++accepted;
      }
    }
    chain.samples.push_back(current);
  }
  accept_rate = static_cast<double>(accepted) / static_cast<double>(config.iterations);
  nonconverged_fraction =
      static_cast<double>(nonconverged) / static_cast<double>(config.iterations + 1);
  return chain;
}

std::string sigma_scatter_csv(const SigmaChain& chain, std::int64_t thinning,
                              const std::string& hash) {
  std::string csv = stamp(hash, chain.seed);
  csv += "step,sigma_x,sigma_y\n";
  for (std::size_t i = thinning - 1; i < chain.samples.size();
       i += static_cast<std::size_t>(thinning)) {
    csv += std::to_string(i + 1) + "," + fmt(std::exp(chain.samples[i].log_sigma_x)) + "," +
           fmt(std::exp(chain.samples[i].log_sigma_y)) + "\n";
  }
  return csv;
}

}  // namespace

ExperimentConfig config_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("config: invalid JSON: ") + e.what());
  }
  if (!j.is_object()) throw std::invalid_argument("config: expected a JSON object");

  ExperimentConfig config;
  try {
    check_keys(j,
               {"experiment", "method", "approximator", "iterations", "thinning", "seed",
                "out_dir", "data_path", "proposal_std", "epsilon", "bins", "bp_flag_fraction",
                "synthetic", "semisup", "flawed"},
               "top level");
    if (!j.contains("experiment"))
      throw std::invalid_argument("config: missing required key \"experiment\"");
    const auto kind_name = j.at("experiment").get<std::string>();
    const auto it = kind_names().find(kind_name);
    if (it == kind_names().end())
      throw std::invalid_argument("config: unknown experiment \"" + kind_name + "\"");
    config.kind = it->second;

    if (j.contains("method")) config.method = j.at("method").get<std::string>();
    if (j.contains("approximator"))
      config.approximator = j.at("approximator").get<std::string>();
    if (j.contains("iterations")) config.iterations = j.at("iterations").get<std::int64_t>();
    if (j.contains("thinning")) config.thinning = j.at("thinning").get<std::int64_t>();
    if (j.contains("seed")) config.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("out_dir")) config.out_dir = j.at("out_dir").get<std::string>();
    if (j.contains("data_path")) config.data_path = j.at("data_path").get<std::string>();
    if (j.contains("proposal_std")) config.proposal_std = j.at("proposal_std").get<double>();
    if (j.contains("epsilon")) config.epsilon = j.at("epsilon").get<double>();
    if (j.contains("bins")) config.bins = j.at("bins").get<int>();
    if (j.contains("bp_flag_fraction"))
      config.bp_flag_fraction = j.at("bp_flag_fraction").get<double>();

    if (j.contains("synthetic")) {
      const auto& s = j.at("synthetic");
      check_keys(s, {"k", "n_edges"}, "synthetic");
      if (s.contains("k")) config.synthetic.k = s.at("k").get<int>();
      if (s.contains("n_edges")) config.synthetic.n_edges = s.at("n_edges").get<int>();
    }
    if (j.contains("semisup")) {
      const auto& s = j.at("semisup");
      check_keys(s,
                 {"epsilon", "n_sweeps", "toy_points", "predict_sweeps", "predict_burn_in",
                  "predict_sigmas"},
                 "semisup");
      if (s.contains("epsilon")) config.semisup.epsilon = s.at("epsilon").get<double>();
      if (s.contains("n_sweeps")) config.semisup.n_sweeps = s.at("n_sweeps").get<int>();
      if (s.contains("toy_points")) config.semisup.toy_points = s.at("toy_points").get<int>();
      if (s.contains("predict_sweeps"))
        config.semisup.predict_sweeps = s.at("predict_sweeps").get<int>();
      if (s.contains("predict_burn_in"))
        config.semisup.predict_burn_in = s.at("predict_burn_in").get<int>();
      if (s.contains("predict_sigmas"))
        config.semisup.predict_sigmas = s.at("predict_sigmas").get<int>();
    }
    if (j.contains("flawed")) {
      const auto& f = j.at("flawed");
      check_keys(f, {"n_values", "grid_lo", "grid_hi", "grid_points"}, "flawed");
      if (f.contains("n_values"))
        config.flawed.n_values = f.at("n_values").get<std::vector<std::int64_t>>();
      if (f.contains("grid_lo")) config.flawed.grid_lo = f.at("grid_lo").get<double>();
      if (f.contains("grid_hi")) config.flawed.grid_hi = f.at("grid_hi").get<double>();
      if (f.contains("grid_points")) config.flawed.grid_points = f.at("grid_points").get<int>();
    }
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("config: bad value type: ") + e.what());
  }

  validate_config(config);
  return config;
}

std::string config_to_json(const ExperimentConfig& config) {
  const nlohmann::json j = {
      {"experiment", kind_to_string(config.kind)},
      {"method", config.method},
      {"approximator", config.approximator},
      {"iterations", config.iterations},
      {"thinning", config.thinning},
      {"seed", config.seed},
      {"out_dir", config.out_dir},
      {"data_path", config.data_path},
      {"proposal_std", config.proposal_std},
      {"epsilon", config.epsilon},
      {"bins", config.bins},
      {"bp_flag_fraction", config.bp_flag_fraction},
      {"synthetic", {{"k", config.synthetic.k}, {"n_edges", config.synthetic.n_edges}}},
      {"semisup",
       {{"epsilon", config.semisup.epsilon},
        {"n_sweeps", config.semisup.n_sweeps},
        {"toy_points", config.semisup.toy_points},
        {"predict_sweeps", config.semisup.predict_sweeps},
        {"predict_burn_in", config.semisup.predict_burn_in},
        {"predict_sigmas", config.semisup.predict_sigmas}}},
      {"flawed",
       {{"n_values", config.flawed.n_values},
        {"grid_lo", config.flawed.grid_lo},
        {"grid_hi", config.flawed.grid_hi},
        {"grid_points", config.flawed.grid_points}}},
  };
  return j.dump(2);
}

std::string config_hash(const ExperimentConfig& config) {
  return hex16(fnv1a64(config_to_json(config)));
}

DataSet load_contingency(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::map<std::vector<std::int8_t>, std::int64_t> tally;
  bool first_content = true;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const std::string t = trimmed(line);
    if (t.empty() || t[0] == '#') continue;

    const std::vector<std::string> fields = split_csv_line(line);
    if (fields.size() != 7)
      throw std::invalid_argument(
          "contingency CSV: expected 6 binary columns plus a count column");

    bool numeric = true;
    double probe;
    for (const std::string& f : fields)
      if (!parse_number(f, probe)) numeric = false;
    if (!numeric) {
      if (first_content) {
        first_content = false;  // header row
        continue;
      }
      throw std::invalid_argument("contingency CSV: malformed row \"" + line + "\"");
    }
    first_content = false;

    std::vector<std::int8_t> row(6);
    for (int i = 0; i < 6; ++i) {
      if (fields[i] == "0")
        row[i] = 0;
      else if (fields[i] == "1")
        row[i] = 1;
      else
        throw std::invalid_argument("contingency CSV: non-binary cell \"" + fields[i] + "\"");
    }
    double count_value;
    parse_number(fields[6], count_value);
    const auto count = static_cast<std::int64_t>(count_value);
    if (count_value != static_cast<double>(count) || count < 0)
      throw std::invalid_argument("contingency CSV: count must be a non-negative integer");
    if (count == 0) continue;
    tally[row] += count;
    if (tally.size() > 64)
      throw std::invalid_argument("contingency CSV: more than 64 distinct rows");
  }

  std::vector<std::vector<std::int8_t>> rows;
  std::vector<std::int64_t> counts;
  for (const auto& [row, count] : tally) {
    rows.push_back(row);
    counts.push_back(count);
  }
  return DataSet(6, std::move(rows), std::move(counts));
}

DataSet load_contingency_file(const std::filesystem::path& path) {
  return load_contingency(read_file(path));
}

std::string contingency_csv(const DataSet& data) {
  if (data.k() != 6) throw std::invalid_argument("contingency_csv: expected 6 variables");
  if (!data.fully_observed())
    throw std::invalid_argument("contingency_csv: rows must be fully observed");
  std::string csv = "v0,v1,v2,v3,v4,v5,count\n";
  for (std::size_t r = 0; r < data.n_distinct(); ++r) {
    for (std::int8_t v : data.row(r)) csv += std::to_string(int(v)) + ",";
    csv += std::to_string(data.count(r)) + "\n";
  }
  return csv;
}

Model heart_standin_model() {
  std::vector<Edge> edges = {
      {0, 1, 0.6},  {0, 2, 0.3},   {0, 3, -0.2}, {0, 4, 0.25}, {0, 5, 0.1},
      {1, 2, 0.45}, {1, 3, 0.15},  {1, 4, -0.3}, {1, 5, 0.2},  {2, 3, 0.5},
      {2, 4, 0.05}, {2, 5, -0.15}, {3, 4, 0.35}, {3, 5, 0.25}, {4, 5, 0.4},
  };
  std::vector<double> biases = {-0.8, -0.3, -0.6, 0.2, -0.4, -0.1};
  return Model(6, std::move(edges), std::move(biases));
}

DataSet heart_standin() {
  const Model model = heart_standin_model();
  Rng rng = make_rng(1841);
  const std::vector<State> states = exact_sample(model, rng, 1841);
  std::map<std::vector<std::int8_t>, std::int64_t> tally;
  for (const State& s : states) {
    std::vector<std::int8_t> row(s.begin(), s.end());
    ++tally[row];
  }
  std::vector<std::vector<std::int8_t>> rows;
  std::vector<std::int64_t> counts;
  for (const auto& [row, count] : tally) {
    rows.push_back(row);
    counts.push_back(count);
  }
  return DataSet(6, std::move(rows), std::move(counts));
}

SyntheticSystem gen_synthetic(int k, int n_edges, std::uint64_t seed) {
  if (k < 1) throw std::invalid_argument("gen_synthetic: k must be positive");
  const std::int64_t max_edges = static_cast<std::int64_t>(k) * (k - 1) / 2;
  if (n_edges < 0 || n_edges > max_edges)
    throw std::invalid_argument("gen_synthetic: n_edges out of range");

  Rng rng = make_rng(seed);
  std::set<std::pair<int, int>> pairs;
  while (static_cast<int>(pairs.size()) < n_edges) {
    const int a = static_cast<int>(uniform_below(rng, static_cast<std::uint64_t>(k)));
    const int b = static_cast<int>(uniform_below(rng, static_cast<std::uint64_t>(k)));
    if (a == b) continue;
    pairs.insert({std::min(a, b), std::max(a, b)});
  }
  std::vector<Edge> edges;
  edges.reserve(pairs.size());
  for (const auto& [i, j] : pairs) edges.push_back({i, j, normal01(rng)});
  std::vector<double> biases(static_cast<std::size_t>(k));
  for (double& b : biases) b = normal01(rng);

  SyntheticSystem sys{Model(k, std::move(edges), std::move(biases)), DataSet(k, {}), false};

  constexpr int kRows = 100;
  std::vector<std::vector<std::int8_t>> rows;
  rows.reserve(kRows);
  if (k <= kDefaultEnumCap) {
    const std::vector<State> states = exact_sample(sys.truth, rng, kRows);
    for (const State& s : states) rows.emplace_back(s.begin(), s.end());
    sys.exact_sampled = true;
  } else {
    State state = random_state(k, rng);
    for (int sweep = 0; sweep < 10000; ++sweep) gibbs_sweep(sys.truth, state, rng);
    for (int r = 0; r < kRows; ++r) {
      for (int sweep = 0; sweep < 10; ++sweep) gibbs_sweep(sys.truth, state, rng);
      rows.emplace_back(state.begin(), state.end());
    }
    sys.exact_sampled = false;
  }
  sys.data = DataSet(k, std::move(rows));
  return sys;
}

ParamLayout full_layout(int k) {
  if (k < 1) throw std::invalid_argument("full_layout: k must be positive");
  ParamLayout layout;
  layout.k = k;
  for (int i = 0; i < k; ++i)
    for (int j = i + 1; j < k; ++j) layout.edge_order.emplace_back(i, j);
  return layout;
}

PointSet semisup_toy(int n_points) {
  PointSet points;
  const auto add = [&](double x, double y, std::int8_t label) {
    points.xs.push_back(x);
    points.ys.push_back(y);
    points.labels.push_back(label);
  };
  if (n_points == 12) {
    // Swap-symmetric reduction: exchanging the axes maps the layout onto
    // itself with the classes flipped, so the sigma posterior is exactly
    // symmetric across the diagonal.
    add(-1.6, 1.4, 0);
    add(-1.4, 1.6, 0);
    add(-1.5, 1.5, kHidden);
    add(1.4, -1.6, 1);
    add(1.6, -1.4, 1);
    add(1.5, -1.5, kHidden);
    add(0.0, 0.0, kHidden);
    add(0.3, 0.1, kHidden);
    add(0.1, 0.3, kHidden);
    add(-0.3, -0.2, kHidden);
    add(-0.2, -0.3, kHidden);
    add(0.2, 0.2, kHidden);
    return points;
  }
  if (n_points == 80) {
    Rng rng = make_rng(80);
    const auto cluster = [&](double cx, double cy, double spread, int count,
                             std::int8_t label) {
      for (int i = 0; i < count; ++i) {
        const double x = cx + spread * normal01(rng);
        const double y = cy + spread * normal01(rng);
        add(x, y, label);
      }
    };
    cluster(-1.5, 1.5, 0.35, 20, 0);
    cluster(1.5, -1.5, 0.35, 20, 1);
    cluster(0.0, 0.0, 0.7, 40, kHidden);
    return points;
  }
  throw std::invalid_argument("semisup_toy: supported sizes are 12 and 80");
}

std::string emit_histogram_svg(std::span<const HistogramCurve> curves,
                               std::span<const double> markers, const std::string& title) {
  if (curves.empty()) throw std::invalid_argument("emit_histogram_svg: no histograms");
  std::vector<SvgCurve> outlines;
  for (const HistogramCurve& curve : curves) {
    if (curve.bin_edges.size() < 2 || curve.bin_edges.size() != curve.masses.size() + 1)
      throw std::invalid_argument("emit_histogram_svg: malformed histogram");
    SvgCurve outline;
    outline.label = curve.label;
    outline.points.emplace_back(curve.bin_edges.front(), 0.0);
    for (std::size_t b = 0; b < curve.masses.size(); ++b) {
      outline.points.emplace_back(curve.bin_edges[b], curve.masses[b]);
      outline.points.emplace_back(curve.bin_edges[b + 1], curve.masses[b]);
    }
    outline.points.emplace_back(curve.bin_edges.back(), 0.0);
    outlines.push_back(std::move(outline));
  }
  return line_chart_svg(outlines, markers, title);
}

HeartResult run_heart_suite(const ExperimentConfig& config) {
  validate_config(config);
  const std::string hash = config_hash(config);
  const std::filesystem::path out_dir = config.out_dir;

  const DataSet data = config.data_path.empty() ? heart_standin()
                                                : load_contingency_file(config.data_path);
  if (data.k() != 6)
    throw std::invalid_argument("heart suite: expected 6-variable data");
  const ParamLayout layout = full_layout(6);
  const GaussianPrior prior;

  ChainConfig base;
  base.proposal.std_dev = config.proposal_std;
  base.epsilon = config.epsilon;
  base.iterations = config.iterations;
  base.thinning = config.thinning;

  const std::vector<std::string> names = {"exact", "mean_field", "tree", "loopy", "brief"};
  std::vector<Chain> chains;
  for (std::size_t i = 0; i < names.size(); ++i) {
    ChainConfig chain_config = base;
    chain_config.seed = derive_seed(config.seed, i);
    if (names[i] == "brief") {
      chain_config.method = ChainMethod::Langevin;
      const auto estimator = make_brief_moment_estimator(data, 1);
      chains.push_back(run_langevin_chain(chain_config, data, prior, layout, *estimator));
    } else {
      chain_config.method = ChainMethod::Metropolis;
      const std::map<std::string, std::string> approximators = {{"exact", "exact"},
                                                                {"mean_field", "mean-field"},
                                                                {"tree", "tree"},
                                                                {"loopy", "bethe"}};
      const auto logz = make_approximator(approximators.at(names[i]));
      chains.push_back(run_metropolis_chain(chain_config, data, prior, layout, *logz));
    }
  }

  HeartResult result;
  result.out_dir = out_dir;
  result.hash = hash;
  result.layout = layout;

  std::string overlap_csv = stamp(hash, config.seed) + "coord,method,overlap\n";
  for (std::size_t i = 0; i < chains.size(); ++i) {
    result.reports.push_back(report_chain(names[i], chains[i], config));
    write_chain_file(out_dir / "chains" / (names[i] + ".jsonl"), hash, chains[i]);
    write_file(out_dir / "histograms" / (names[i] + ".csv"),
               histogram_table_csv(chain_histograms(chains[i], config.bins), hash,
                                   chains[i].seed));

    std::vector<double> overlaps(layout.size(), 1.0);
    std::vector<double> variances(layout.size(), 0.0);
    for (std::size_t c = 0; c < layout.size(); ++c) {
      const std::vector<double> column = coord_column(chains[i], c);
      variances[c] = unbiased_variance(column);
      if (i > 0) {
        overlaps[c] = overlap_coefficient(coord_column(chains[0], c), column, config.bins);
        overlap_csv += layout.coord_name(c) + "," + names[i] + "," + fmt(overlaps[c]) + "\n";
      }
    }
    result.overlap_vs_exact.push_back(std::move(overlaps));
    result.sample_variance.push_back(std::move(variances));
  }
  write_file(out_dir / "overlap.csv", overlap_csv);

  std::vector<const Chain*> chain_ptrs;
  for (const Chain& chain : chains) chain_ptrs.push_back(&chain);
  for (std::size_t c = 0; c < layout.size(); ++c) {
    const std::string name = layout.coord_name(c);
    const std::string svg =
        coord_overlay_svg(chain_ptrs, names, c, config.bins, {}, name);
    write_file(out_dir / "plots" / (name + ".svg"),
               "<!-- config=" + hash + " seed=" + std::to_string(config.seed) + " -->\n" + svg);
  }

  nlohmann::json manifest = manifest_base(config, hash);
  manifest["suite"] = "heart";
  manifest["n"] = data.total_count();
  manifest["data_source"] = config.data_path.empty() ? "built-in stand-in" : config.data_path;
  if (config.data_path.empty())
    manifest["substitutions"].push_back(
        "6-variable contingency data replaced by the deterministic synthetic stand-in");
  manifest["chains"] = nlohmann::json::array();
  for (std::size_t i = 0; i < result.reports.size(); ++i) {
    nlohmann::json entry = report_json(result.reports[i]);
    if (i > 0) {
      double min_overlap = 1.0;
      std::size_t above = 0;
      for (double o : result.overlap_vs_exact[i]) {
        min_overlap = std::min(min_overlap, o);
        if (o >= 0.8) ++above;
      }
      entry["min_overlap_vs_exact"] = min_overlap;
      entry["fraction_overlap_ge_0.8"] =
          static_cast<double>(above) / static_cast<double>(layout.size());
    }
    manifest["chains"].push_back(entry);
  }
  write_manifest(out_dir, manifest);
  return result;
}

SyntheticResult run_synthetic_suite(const ExperimentConfig& config) {
  validate_config(config);
  const std::string hash = config_hash(config);
  const std::filesystem::path out_dir = config.out_dir;

  SyntheticSystem sys =
      gen_synthetic(config.synthetic.k, config.synthetic.n_edges, derive_seed(config.seed, 100));
  const ParamVector truth = vectorize(sys.truth);
  const ParamLayout& layout = truth.layout;
  const GaussianPrior prior;

  ChainConfig base;
  base.proposal.std_dev = config.proposal_std;
  base.epsilon = config.epsilon;
  base.iterations = config.iterations;
  base.thinning = config.thinning;

  std::vector<Chain> chains;
  {
    ChainConfig chain_config = base;
    chain_config.method = ChainMethod::Metropolis;
    chain_config.seed = derive_seed(config.seed, 0);
    const auto logz = make_bethe_logz();
    chains.push_back(run_metropolis_chain(chain_config, sys.data, prior, layout, *logz));
  }
  {
    ChainConfig chain_config = base;
    chain_config.method = ChainMethod::Langevin;
    chain_config.seed = derive_seed(config.seed, 1);
    const auto estimator = make_brief_moment_estimator(sys.data, 1);
    chains.push_back(run_langevin_chain(chain_config, sys.data, prior, layout, *estimator));
  }
  const std::vector<std::string> names = {"loopy", "brief"};

  SyntheticResult result{.out_dir = out_dir,
                         .hash = hash,
                         .truth = sys.truth,
                         .exact_sampled = sys.exact_sampled,
                         .reports = {},
                         .f_curves = {},
                         .prior_f_curve = {}};

  const Chain prior_chain = sample_prior_chain(
      prior, layout, static_cast<std::int64_t>(chains[0].samples.size()),
      derive_seed(config.seed, 101));
  result.prior_f_curve = f_curve(prior_chain, truth);

  for (std::size_t i = 0; i < chains.size(); ++i) {
    result.reports.push_back(report_chain(names[i], chains[i], config));
    result.f_curves.push_back(f_curve(chains[i], truth));
    write_chain_file(out_dir / "chains" / (names[i] + ".jsonl"), hash, chains[i]);
  }

  write_file(out_dir / "truth.json", sys.truth.to_json() + "\n");
  std::string truth_csv = stamp(hash, config.seed) + "coord,value\n";
  for (std::size_t c = 0; c < layout.size(); ++c)
    truth_csv += layout.coord_name(c) + "," + fmt(truth.values[c]) + "\n";
  write_file(out_dir / "truth.csv", truth_csv);

  std::string fcurves = stamp(hash, config.seed) + "rank,loopy,brief,prior\n";
  for (std::size_t r = 0; r < layout.size(); ++r) {
    fcurves += std::to_string(r) + "," + fmt(result.f_curves[0][r]) + "," +
               fmt(result.f_curves[1][r]) + "," + fmt(result.prior_f_curve[r]) + "\n";
  }
  write_file(out_dir / "fcurves.csv", fcurves);

  std::vector<const Chain*> chain_ptrs = {&chains[0], &chains[1]};
  std::vector<std::size_t> plot_coords;
  for (std::size_t c = 0; c < std::min<std::size_t>(3, layout.n_edges()); ++c)
    plot_coords.push_back(c);
  for (std::size_t c = 0; c < std::min<std::size_t>(3, static_cast<std::size_t>(layout.k)); ++c)
    plot_coords.push_back(layout.n_edges() + c);
  for (std::size_t c : plot_coords) {
    const std::string name = layout.coord_name(c);
    const double marker = truth.values[c];
    const std::string svg = coord_overlay_svg(chain_ptrs, names, c, config.bins,
                                              std::span<const double>(&marker, 1), name);
    write_file(out_dir / "plots" / (name + ".svg"),
               "<!-- config=" + hash + " seed=" + std::to_string(config.seed) + " -->\n" + svg);
  }

  nlohmann::json manifest = manifest_base(config, hash);
  manifest["suite"] = "synthetic";
  manifest["k"] = config.synthetic.k;
  manifest["n_edges"] = config.synthetic.n_edges;
  manifest["exact_sampled"] = sys.exact_sampled;
  if (!sys.exact_sampled)
    manifest["substitutions"].push_back(
        "training rows drawn by long-run Gibbs (burn-in 10000 sweeps, thinning 10) instead of "
        "exact sampling");
  manifest["chains"] = nlohmann::json::array();
  for (std::size_t i = 0; i < result.reports.size(); ++i) {
    nlohmann::json entry = report_json(result.reports[i]);
    entry["median_f"] = median_of(result.f_curves[i]);
    manifest["chains"].push_back(entry);
  }
  manifest["prior_median_f"] = median_of(result.prior_f_curve);
  write_manifest(out_dir, manifest);
  return result;
}

SemisupResult run_semisup_suite(const ExperimentConfig& config) {
  validate_config(config);
  const std::string hash = config_hash(config);
  const std::filesystem::path out_dir = config.out_dir;

  const PointSet points = config.data_path.empty()
                              ? semisup_toy(config.semisup.toy_points)
                              : load_pointset_csv(read_file(config.data_path));
  bool any_labelled = false;
  for (std::int8_t l : points.labels)
    if (l != kHidden) any_labelled = true;
  if (!any_labelled)
    throw std::invalid_argument("semisup suite: need at least one labelled point");

  SigmaChainConfig sigma_config;
  sigma_config.epsilon = config.semisup.epsilon;
  sigma_config.iterations = config.iterations;
  sigma_config.n_sweeps = config.semisup.n_sweeps;
  sigma_config.seed = derive_seed(config.seed, 200);

  SemisupResult result;
  result.out_dir = out_dir;
  result.hash = hash;
  result.langevin = run_sigma_chain(points, sigma_config);
  result.loopy = loopy_sigma_chain(points, config, derive_seed(config.seed, 201),
                                   result.loopy_accept_rate, result.loopy_nonconverged_fraction);
  result.loopy_flagged = result.loopy_nonconverged_fraction > config.bp_flag_fraction;

  write_file(out_dir / "sigma_scatter.csv",
             sigma_scatter_csv(result.langevin, config.thinning, hash));
  write_file(out_dir / "sigma_scatter_loopy.csv",
             sigma_scatter_csv(result.loopy, config.thinning, hash));

  std::vector<SigmaParams> draws;
  const std::size_t n_samples = result.langevin.samples.size();
  const std::size_t n_draws =
      std::min<std::size_t>(static_cast<std::size_t>(config.semisup.predict_sigmas), n_samples);
  for (std::size_t d = 0; d < n_draws; ++d)
    draws.push_back(result.langevin.samples[(d + 1) * n_samples / n_draws - 1]);
  Rng rng = make_rng(derive_seed(config.seed, 202));
  result.predictions = predict_labels(points, draws, config.semisup.predict_sweeps,
                                      config.semisup.predict_burn_in, rng);

  std::string predictions_csv = stamp(hash, config.seed) + "index,x,y,label,p_one\n";
  for (std::size_t i = 0; i < points.size(); ++i) {
    const std::string label =
        points.labels[i] == kHidden ? "?" : std::to_string(int(points.labels[i]));
    predictions_csv += std::to_string(i) + "," + fmt(points.xs[i]) + "," + fmt(points.ys[i]) +
                       "," + label + "," + fmt(result.predictions[i]) + "\n";
  }
  write_file(out_dir / "predictions.csv", predictions_csv);

  const auto region_masses = [](const SigmaChain& chain) {
    double corner = 0.0, arm_x = 0.0, arm_y = 0.0;
    for (const SigmaParams& s : chain.samples) {
      const bool big_x = s.log_sigma_x > 2.0;
      const bool big_y = s.log_sigma_y > 2.0;
      if (big_x && big_y)
        corner += 1.0;
      else if (big_x)
        arm_x += 1.0;
      else if (big_y)
        arm_y += 1.0;
    }
    const auto n = static_cast<double>(chain.samples.size());
    return nlohmann::json{
        {"corner_both_large", corner / n}, {"arm_x_large", arm_x / n}, {"arm_y_large", arm_y / n}};
  };

  nlohmann::json manifest = manifest_base(config, hash);
  manifest["suite"] = "semisup";
  manifest["n_points"] = points.size();
  manifest["points_source"] =
      config.data_path.empty() ? "built-in " + std::to_string(config.semisup.toy_points) +
                                     "-point layout"
                               : config.data_path;
  manifest["langevin"] = {{"epsilon", config.semisup.epsilon},
                          {"samples", result.langevin.samples.size()},
                          {"regions", region_masses(result.langevin)}};
  manifest["loopy"] = {{"accept_rate", result.loopy_accept_rate},
                       {"nonconverged_fraction", result.loopy_nonconverged_fraction},
                       {"flagged", result.loopy_flagged},
                       {"regions", region_masses(result.loopy)}};
  write_manifest(out_dir, manifest);
  return result;
}

FlawedDemoResult run_flawed_joint_demo(const ExperimentConfig& config) {
  validate_config(config);
  const std::string hash = config_hash(config);
  const std::filesystem::path out_dir = config.out_dir;
  const FlawedDemoSpec& spec = config.flawed;

  FlawedDemoResult result;
  result.out_dir = out_dir;
  result.hash = hash;
  result.grid = linspace(spec.grid_lo, spec.grid_hi, spec.grid_points);

  std::vector<double> log_z(result.grid.size());
  for (std::size_t i = 0; i < result.grid.size(); ++i)
    log_z[i] = exact_logZ(Model(2, {{0, 1, result.grid[i]}}, {0.0, 0.0}));

  const double dw = (spec.grid_hi - spec.grid_lo) / (spec.grid_points - 1);
  for (std::int64_t n : spec.n_values) {
    std::vector<double> log_density(result.grid.size());
    double max_log = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < result.grid.size(); ++i) {
      log_density[i] =
          -0.5 * result.grid[i] * result.grid[i] + static_cast<double>(n) * log_z[i];
      max_log = std::max(max_log, log_density[i]);
    }
    std::vector<double> density(result.grid.size());
    double total = 0.0;
    std::size_t best = 0;
    for (std::size_t i = 0; i < result.grid.size(); ++i) {
      density[i] = std::exp(log_density[i] - max_log);
      total += density[i];
      if (log_density[i] > log_density[best]) best = i;
    }
    for (double& d : density) d /= total * dw;
    result.densities.push_back(std::move(density));
    result.argmax.push_back(result.grid[best]);
  }

  std::string csv = stamp(hash, config.seed) + "w";
  for (std::int64_t n : spec.n_values) csv += ",density_N" + std::to_string(n);
  csv += "\n";
  for (std::size_t i = 0; i < result.grid.size(); ++i) {
    csv += fmt(result.grid[i]);
    for (const auto& density : result.densities) csv += "," + fmt(density[i]);
    csv += "\n";
  }
  write_file(out_dir / "flawed_prior.csv", csv);

  std::vector<SvgCurve> curves;
  for (std::size_t j = 0; j < spec.n_values.size(); ++j) {
    SvgCurve curve;
    curve.label = "N=" + std::to_string(spec.n_values[j]);
    for (std::size_t i = 0; i < result.grid.size(); ++i)
      curve.points.emplace_back(result.grid[i], result.densities[j][i]);
    curves.push_back(std::move(curve));
  }
  write_file(out_dir / "flawed_prior.svg",
             "<!-- config=" + hash + " seed=" + std::to_string(config.seed) + " -->\n" +
                 line_chart_svg(curves, {}, "implied prior vs data-set size"));

  bool monotone = true;
  for (std::size_t j = 1; j < result.argmax.size(); ++j)
    if (result.argmax[j] < result.argmax[j - 1]) monotone = false;

  nlohmann::json manifest = manifest_base(config, hash);
  manifest["suite"] = "flawed-joint-demo";
  manifest["n_values"] = spec.n_values;
  manifest["argmax"] = result.argmax;
  manifest["argmax_monotone_nondecreasing"] = monotone;
  write_manifest(out_dir, manifest);
  return result;
}

CustomResult run_custom_suite(const ExperimentConfig& config) {
  validate_config(config);
  const std::string hash = config_hash(config);
  const std::filesystem::path out_dir = config.out_dir;

  const DataSet data = config.data_path.empty() ? heart_standin()
                                                : load_contingency_file(config.data_path);
  const ParamLayout layout = full_layout(data.k());
  const GaussianPrior prior;

  ChainConfig chain_config;
  chain_config.proposal.std_dev = config.proposal_std;
  chain_config.epsilon = config.epsilon;
  chain_config.iterations = config.iterations;
  chain_config.thinning = config.thinning;
  chain_config.seed = derive_seed(config.seed, 0);

  Chain chain = [&] {
    if (config.method == "metropolis") {
      chain_config.method = ChainMethod::Metropolis;
      const auto logz = make_approximator(config.approximator);
      return run_metropolis_chain(chain_config, data, prior, layout, *logz);
    }
    if (config.method == "ratio") {
      chain_config.method = ChainMethod::RatioMetropolis;
      return run_ratio_chain(chain_config, data, prior, layout);
    }
    chain_config.method = ChainMethod::Langevin;
    const auto estimator = make_brief_moment_estimator(data, 1);
    return run_langevin_chain(chain_config, data, prior, layout, *estimator);
  }();

  CustomResult result;
  result.out_dir = out_dir;
  result.hash = hash;
  result.report = report_chain("chain", chain, config);

  write_chain_file(out_dir / "chains" / "chain.jsonl", hash, chain);
  write_file(out_dir / "histograms" / "chain.csv",
             histogram_table_csv(chain_histograms(chain, config.bins), hash, chain.seed));
  const std::vector<const Chain*> chain_ptrs = {&chain};
  const std::vector<std::string> labels = {config.method};
  for (std::size_t c = 0; c < layout.size(); ++c) {
    const std::string name = layout.coord_name(c);
    write_file(out_dir / "plots" / (name + ".svg"),
               "<!-- config=" + hash + " seed=" + std::to_string(config.seed) + " -->\n" +
                   coord_overlay_svg(chain_ptrs, labels, c, config.bins, {}, name));
  }

  nlohmann::json manifest = manifest_base(config, hash);
  manifest["suite"] = "custom";
  manifest["n"] = data.total_count();
  manifest["chains"] = nlohmann::json::array({report_json(result.report)});
  write_manifest(out_dir, manifest);
  return result;
}

std::filesystem::path run_experiment(const ExperimentConfig& config) {
  switch (config.kind) {
    case ExperimentKind::Heart:
      return run_heart_suite(config).out_dir;
    case ExperimentKind::Synthetic:
      return run_synthetic_suite(config).out_dir;
    case ExperimentKind::Semisup:
      return run_semisup_suite(config).out_dir;
    case ExperimentKind::FlawedJointDemo:
      return run_flawed_joint_demo(config).out_dir;
    case ExperimentKind::Custom:
      return run_custom_suite(config).out_dir;
  }
  throw std::invalid_argument("unknown experiment kind");
}

}  // namespace bmb
