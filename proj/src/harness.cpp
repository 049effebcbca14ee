#include "cbdbp/harness.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <numeric>
#include <set>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

#include "cbdbp/complexity.hpp"
#include "cbdbp/errors.hpp"

namespace cbdbp {

using json = nlohmann::json;

namespace {

// Walks one JSON object, converting known keys and remembering which ones
// were consumed so that typos can be reported.
class Reader {
 public:
  Reader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(where() + ": expected an object");
  }

  template <typename T>
  void get(const char* key, T& out) {
    if (!j_.contains(key)) return;
    seen_.insert(key);
    try {
      convert(j_.at(key), out);
    } catch (const std::exception& e) {
      throw ConfigError(where(key) + ": " + e.what());
    }
  }

  Reader child(const char* key) {
    seen_.insert(key);
    return Reader(j_.at(key), path_ + "/" + key);
  }

  bool has(const char* key) const { return j_.contains(key); }

  void finish() const {
    for (const auto& item : j_.items())
      if (!seen_.count(item.key())) throw ConfigError(where(item.key()) + ": unknown key");
  }

  std::string where(const std::string& key = "") const {
    const std::string p = key.empty() ? path_ : path_ + "/" + key;
    return "config " + (p.empty() ? std::string("/") : p);
  }

 private:
  template <typename T>
  static void convert(const json& v, T& out) {
    out = v.get<T>();
  }
  static void convert(const json& v, int& out) {
    if (!v.is_number()) throw ConfigError("expected a number");
    const double d = v.get<double>();
    if (d != std::floor(d) || std::abs(d) > 2e9) throw ConfigError("expected an integer");
    out = static_cast<int>(d);
  }
  static void convert(const json& v, std::size_t& out) {
    if (!v.is_number()) throw ConfigError("expected a number");
    const double d = v.get<double>();
    if (d != std::floor(d) || d < 0) throw ConfigError("expected a non-negative integer");
    out = v.is_number_unsigned() ? v.get<std::size_t>() : static_cast<std::size_t>(d);
  }
  static void convert(const json& v, std::vector<int>& out) {
    if (!v.is_array()) throw ConfigError("expected an array");
    out.clear();
    for (const auto& e : v) {
      int x = 0;
      convert(e, x);
      out.push_back(x);
    }
  }
  static void convert(const json& v, Rational& out) {
    if (v.is_number_integer()) {
      out = Rational(v.get<std::int64_t>(), 1);
      return;
    }
    if (!v.is_string()) throw ConfigError("expected a ratio string such as \"9/8\"");
    const auto s = v.get<std::string>();
    const auto slash = s.find('/');
    const auto whole = [&](std::string_view t) {
      std::int64_t x = 0;
      const auto [end, ec] = std::from_chars(t.data(), t.data() + t.size(), x);
      if (ec != std::errc() || end != t.data() + t.size() || t.empty()) throw ConfigError("malformed ratio \"" + s + "\"");
      return x;
    };
    const std::string_view sv(s);
    out = slash == std::string::npos ? Rational(whole(sv), 1) : Rational(whole(sv.substr(0, slash)), whole(sv.substr(slash + 1)));
  }
  static void convert(const json& v, std::optional<std::size_t>& out) {
    if (v.is_string() && v.get<std::string>() == "auto") {
      out.reset();
      return;
    }
    std::size_t x = 0;
    convert(v, x);
    out = x;
  }

  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

std::size_t line_of(std::string_view text, std::size_t byte) {
  byte = std::min(byte, text.size());
  return 1 + static_cast<std::size_t>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(byte), '\n'));
}

void require(bool ok, const std::string& field, const std::string& msg) {
  if (!ok) throw ConfigError("config /" + field + ": " + msg);
}

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  std::ostringstream os;
  os << std::setprecision(10) << v;
  return os.str();
}

}  // namespace

std::vector<double> RhoSweepSettings::grid() const {
  std::vector<double> g;
  if (step <= 0.0) return {start};
  const auto n = static_cast<int>(std::floor((stop - start) / step + 1e-9));
  for (int k = 0; k <= n; ++k) g.push_back(std::round((start + k * step) * 1e9) / 1e9);
  return g;
}

std::size_t ExperimentConfig::overlap() const {
  if (dbp.overlap) return *dbp.overlap;
  const int max_sb = dbp.num_subbands.empty() ? 1 : *std::max_element(dbp.num_subbands.begin(), dbp.num_subbands.end());
  return default_overlap(link.total_beta2_ps2(), dbp_sample_rate(), std::max(max_sb, dbp.ideal_subbands));
}

std::size_t ExperimentConfig::edge_trim_symbols() const {
  const double memory_symbols = static_cast<double>(overlap()) / dbp.samples_per_symbol.value();
  return 2 * (static_cast<std::size_t>(rrc_span_symbols) + static_cast<std::size_t>(std::ceil(memory_symbols)));
}

void ExperimentConfig::validate() const {
  try {
    wdm.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("config /wdm: ") + e.what());
  }
  require(wdm.num_channels % 2 == 1, "wdm/num_channels", "must be odd so that a channel sits at the centre");
  require(wdm.qam_order == 4 || wdm.qam_order == 16 || wdm.qam_order == 64 || wdm.qam_order == 256, "wdm/qam_order",
          "must be 4, 16, 64 or 256");
  require(rrc_span_symbols >= 16 && rrc_span_symbols % 2 == 0, "wdm/rrc_span_symbols", "must be even and >= 16");
  try {
    link.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("config /link: ") + e.what());
  }
  require(link.num_spans >= 1, "link/num_spans", "must be >= 1");

  require(!dbp.num_steps.empty() && !dbp.num_subbands.empty() && !dbp.splitting_ratio.empty(), "dbp",
          "num_steps, num_subbands and splitting_ratio need at least one value");
  for (int v : dbp.num_steps) require(v >= 1, "dbp/num_steps", "values must be >= 1");
  for (int v : dbp.num_subbands) require(v >= 1, "dbp/num_subbands", "values must be >= 1");
  for (double v : dbp.splitting_ratio) require(v >= 0.0 && v <= 1.0, "dbp/splitting_ratio", "values must lie in [0, 1]");
  require(dbp.samples_per_symbol.num > 0, "dbp/samples_per_symbol", "must be positive");
  require(dbp.intra_half_width >= 0 && dbp.inter_half_width >= 0, "dbp", "half widths must be >= 0");
  require(dbp.ideal_steps_per_span >= 1, "dbp/ideal_steps_per_span", "must be >= 1");
  require(dbp.ideal_subbands >= 1, "dbp/ideal_subbands", "must be >= 1");
  static const std::set<std::string> kinds{"edc", "essfm", "cb-essfm", "ssfm-dbp", "subband-ssfm-dbp"};
  require(!dbp.receivers.empty(), "dbp/receivers", "needs at least one receiver");
  for (const auto& r : dbp.receivers) require(kinds.count(r) == 1, "dbp/receivers", "unknown receiver \"" + r + "\"");

  BlockingConfig blk;
  blk.block_length = dbp.block_length;
  blk.overlap = overlap();
  blk.samples_per_symbol = dbp.samples_per_symbol;
  try {
    blk.validate(wdm.rolloff);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("config /dbp: ") + e.what());
  }
  const std::size_t memory = dispersion_memory_samples(link.total_beta2_ps2(), dbp_sample_rate(), dbp_sample_rate(), 2);
  require(blk.overlap >= memory, "dbp/overlap",
          "below the link dispersion memory of " + std::to_string(memory) + " samples");
  for (int nsb : dbp.num_subbands) {
    require(dbp.block_length % static_cast<std::size_t>(nsb) == 0, "dbp/num_subbands", "block length not divisible by N_sb");
    const std::size_t m = dbp.block_length / static_cast<std::size_t>(nsb);
    require(static_cast<std::size_t>(2 * std::max(dbp.intra_half_width, dbp.inter_half_width) + 1) <= m, "dbp",
            "NLPR filters longer than a subband block");
  }

  try {
    optimizer.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("config /optimizer: ") + e.what());
  }
  require(sweep.step >= 0.0 && sweep.start >= 0.0 && sweep.stop <= 1.0 && sweep.start <= sweep.stop, "sweep",
          "rho grid must lie in [0, 1]");
  require(sweep.refine_step >= 0.0 && sweep.refine_points >= 0, "sweep", "refinement must be non-negative");
  require(!power_grid_dbm.empty(), "power_grid_dbm", "needs at least one power");
  require(std::is_sorted(power_grid_dbm.begin(), power_grid_dbm.end()), "power_grid_dbm", "must be sorted");
  require(realizations >= 1, "realizations", "must be >= 1");

  // Record geometry: channel offsets on the DFT grid, integral resampling.
  const int sps_sim = wdm.simulation_samples_per_symbol();
  const Rational ratio(dbp.samples_per_symbol.num, dbp.samples_per_symbol.den * sps_sim);
  for (auto [n, field] : {std::pair{num_symbols, "num_symbols"}, std::pair{train_symbols, "train_symbols"}}) {
    require(n > 0, field, "must be positive");
    const double bins = wdm.channel_spacing_hz * static_cast<double>(n) / wdm.symbol_rate_hz;
    require(std::abs(bins - std::round(bins)) < 1e-6, field,
            "channel spacing is not a whole number of frequency bins; choose a multiple of the spacing/rate denominator");
    require((static_cast<std::int64_t>(n) * sps_sim * ratio.num) % ratio.den == 0, field,
            "record is not a whole number of samples at the DBP rate");
  }
  const auto rx_len = static_cast<double>(num_symbols) * dbp.samples_per_symbol.value();
  require(rx_len >= 4.0 * static_cast<double>(dbp.block_length), "num_symbols", "num_symbols x n must be >= 4 x N");
  for (int nsb : dbp.num_subbands) {
    const auto train_len = static_cast<std::size_t>(std::llround(static_cast<double>(train_symbols) * dbp.samples_per_symbol.value()));
    require(train_len % static_cast<std::size_t>(nsb) == 0, "train_symbols", "training record not divisible by N_sb");
  }
  require(static_cast<double>(train_symbols) * dbp.samples_per_symbol.value() >= 4.0 * static_cast<double>(memory), "train_symbols",
          "training record shorter than 4 x the dispersion memory");
}

ExperimentConfig preset(std::string_view name) {
  ExperimentConfig c;
  if (name == "desk") {
    c.wdm.num_channels = 3;
    c.wdm.channel_spacing_hz = 50e9;
    c.wdm.symbol_rate_hz = 32e9;
    c.wdm.rolloff = 0.05;
    c.wdm.qam_order = 64;
    c.link.num_spans = 10;
    c.dbp.num_steps = {1, 3, 5, 10};
    c.dbp.num_subbands = {1, 2};
    c.dbp.receivers = {"edc", "essfm", "cb-essfm"};
    c.power_grid_dbm = {-1.0, 0.0, 1.0, 2.0, 3.0, 4.0};
    c.sweep.launch_power_dbm = 2.0;
    c.num_symbols = 65536;
    c.train_symbols = 16384;
  } else if (name == "paper-full") {
    c.wdm.num_channels = 5;
    c.wdm.channel_spacing_hz = 100e9;
    c.wdm.symbol_rate_hz = 93e9;
    c.wdm.rolloff = 0.05;
    c.wdm.qam_order = 64;
    c.link.num_spans = 15;
    c.dbp.num_steps = {1, 3, 5, 15};
    c.dbp.num_subbands = {1, 2};
    c.dbp.receivers = {"edc", "essfm", "cb-essfm", "ssfm-dbp", "subband-ssfm-dbp"};
    c.power_grid_dbm = {0.0, 1.0, 2.0, 3.0, 4.0, 5.0};
    c.sweep.launch_power_dbm = 3.0;
    c.num_symbols = 93 * 1024;
    c.train_symbols = 93 * 256;
  } else {
    throw ConfigError("unknown preset \"" + std::string(name) + "\" (expected desk or paper-full)");
  }
  return c;
}

ExperimentConfig parse_config(std::string_view text, const ExperimentConfig& base) {
  json j;
  try {
    j = json::parse(text.begin(), text.end(), nullptr, true, true);
  } catch (const json::parse_error& e) {
    throw ConfigError("config line " + std::to_string(line_of(text, e.byte)) + ": " + e.what());
  }
  ExperimentConfig c = base;
  Reader root(j, "");
  if (root.has("wdm")) {
    Reader r = root.child("wdm");
    r.get("num_channels", c.wdm.num_channels);
    r.get("channel_spacing_hz", c.wdm.channel_spacing_hz);
    r.get("symbol_rate_hz", c.wdm.symbol_rate_hz);
    r.get("rolloff", c.wdm.rolloff);
    r.get("qam_order", c.wdm.qam_order);
    r.get("launch_power_dbm_per_channel", c.wdm.launch_power_dbm_per_channel);
    r.get("rrc_span_symbols", c.rrc_span_symbols);
    r.finish();
  }
  if (root.has("link")) {
    Reader r = root.child("link");
    r.get("num_spans", c.link.num_spans);
    r.get("span_length_km", c.link.fiber.span_length_km);
    r.get("alpha_db_per_km", c.link.fiber.alpha_db_per_km);
    r.get("dispersion_ps_per_nm_km", c.link.fiber.dispersion_ps_per_nm_km);
    r.get("gamma_per_w_km", c.link.fiber.gamma_per_w_km);
    r.get("reference_wavelength_nm", c.link.fiber.reference_wavelength_nm);
    r.get("noise_figure_db", c.link.noise_figure_db);
    r.get("forward_steps_per_span", c.link.steps_per_span);
    r.get("ase_noise", c.link.ase_noise);
    r.finish();
  }
  if (root.has("dbp")) {
    Reader r = root.child("dbp");
    r.get("num_steps", c.dbp.num_steps);
    r.get("num_subbands", c.dbp.num_subbands);
    r.get("splitting_ratio", c.dbp.splitting_ratio);
    r.get("block_length", c.dbp.block_length);
    r.get("overlap", c.dbp.overlap);
    r.get("samples_per_symbol", c.dbp.samples_per_symbol);
    r.get("intra_half_width", c.dbp.intra_half_width);
    r.get("inter_half_width", c.dbp.inter_half_width);
    r.get("receivers", c.dbp.receivers);
    r.get("coefficients", c.dbp.coefficients);
    r.get("ideal_steps_per_span", c.dbp.ideal_steps_per_span);
    r.get("ideal_subbands", c.dbp.ideal_subbands);
    r.finish();
  }
  if (root.has("optimizer")) {
    Reader r = root.child("optimizer");
    r.get("max_iterations", c.optimizer.max_iterations);
    r.get("relative_tolerance", c.optimizer.relative_tolerance);
    r.get("initial_step", c.optimizer.initial_step);
    r.get("rng_seed", c.optimizer.rng_seed);
    r.get("holdout_fraction", c.optimizer.holdout_fraction);
    r.get("holdout_block_symbols", c.optimizer.holdout_block_symbols);
    r.get("ridge", c.optimizer.ridge);
    r.finish();
  }
  if (root.has("sweep")) {
    Reader r = root.child("sweep");
    r.get("rho_start", c.sweep.start);
    r.get("rho_stop", c.sweep.stop);
    r.get("rho_step", c.sweep.step);
    r.get("rho_refine_step", c.sweep.refine_step);
    r.get("rho_refine_points", c.sweep.refine_points);
    r.get("launch_power_dbm", c.sweep.launch_power_dbm);
    r.finish();
  }
  root.get("power_grid_dbm", c.power_grid_dbm);
  root.get("num_symbols", c.num_symbols);
  root.get("train_symbols", c.train_symbols);
  root.get("rng_seed", c.rng_seed);
  root.get("realizations", c.realizations);
  root.get("output_path", c.output_path);
  root.get("record_wall_time", c.record_wall_time);
  root.finish();
  return c;
}

ExperimentConfig load_config(const std::string& path, const ExperimentConfig& base) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  try {
    return parse_config(ss.str(), base);
  } catch (const ConfigError& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

std::string to_json(const ExperimentConfig& c) {
  json j;
  j["wdm"] = {{"num_channels", c.wdm.num_channels},
              {"channel_spacing_hz", c.wdm.channel_spacing_hz},
              {"symbol_rate_hz", c.wdm.symbol_rate_hz},
              {"rolloff", c.wdm.rolloff},
              {"qam_order", c.wdm.qam_order},
              {"rrc_span_symbols", c.rrc_span_symbols}};
  j["link"] = {{"num_spans", c.link.num_spans},
               {"span_length_km", c.link.fiber.span_length_km},
               {"alpha_db_per_km", c.link.fiber.alpha_db_per_km},
               {"dispersion_ps_per_nm_km", c.link.fiber.dispersion_ps_per_nm_km},
               {"gamma_per_w_km", c.link.fiber.gamma_per_w_km},
               {"reference_wavelength_nm", c.link.fiber.reference_wavelength_nm},
               {"noise_figure_db", c.link.noise_figure_db},
               {"forward_steps_per_span", c.link.steps_per_span},
               {"ase_noise", c.link.ase_noise}};
  j["dbp"] = {{"num_steps", c.dbp.num_steps},
              {"num_subbands", c.dbp.num_subbands},
              {"splitting_ratio", c.dbp.splitting_ratio},
              {"block_length", c.dbp.block_length},
              {"samples_per_symbol", std::to_string(c.dbp.samples_per_symbol.num) + "/" + std::to_string(c.dbp.samples_per_symbol.den)},
              {"intra_half_width", c.dbp.intra_half_width},
              {"inter_half_width", c.dbp.inter_half_width},
              {"receivers", c.dbp.receivers},
              {"coefficients", c.dbp.coefficients},
              {"ideal_steps_per_span", c.dbp.ideal_steps_per_span},
              {"ideal_subbands", c.dbp.ideal_subbands}};
  if (c.dbp.overlap)
    j["dbp"]["overlap"] = *c.dbp.overlap;
  else
    j["dbp"]["overlap"] = "auto";
  j["optimizer"] = {{"max_iterations", c.optimizer.max_iterations},
                    {"relative_tolerance", c.optimizer.relative_tolerance},
                    {"initial_step", c.optimizer.initial_step},
                    {"rng_seed", c.optimizer.rng_seed},
                    {"holdout_fraction", c.optimizer.holdout_fraction},
                    {"holdout_block_symbols", c.optimizer.holdout_block_symbols},
                    {"ridge", c.optimizer.ridge}};
  j["sweep"] = {{"rho_start", c.sweep.start},
                {"rho_stop", c.sweep.stop},
                {"rho_step", c.sweep.step},
                {"rho_refine_step", c.sweep.refine_step},
                {"rho_refine_points", c.sweep.refine_points},
                {"launch_power_dbm", c.sweep.launch_power_dbm}};
  j["power_grid_dbm"] = c.power_grid_dbm;
  j["num_symbols"] = c.num_symbols;
  j["train_symbols"] = c.train_symbols;
  j["rng_seed"] = c.rng_seed;
  j["realizations"] = c.realizations;
  j["output_path"] = c.output_path;
  j["record_wall_time"] = c.record_wall_time;
  return j.dump(2);
}

std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> tags) {
  // splitmix64 finalizer folded over the tags.
  auto mix = [](std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ull;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  };
  std::uint64_t h = mix(base);
  for (auto t : tags) h = mix(h ^ mix(t));
  return h;
}

TrainingSet simulate_record(const ExperimentConfig& cfg, double power_dbm, std::size_t num_symbols, std::uint64_t seed) {
  const int sps_sim = cfg.wdm.simulation_samples_per_symbol();
  const double power_w = 1e-3 * std::pow(10.0, power_dbm / 10.0);
  std::vector<DualPolWaveform> channels;
  SymbolFrame centre;
  const int centre_index = cfg.wdm.num_channels / 2;
  for (int c = 0; c < cfg.wdm.num_channels; ++c) {
    Rng rng(seed, 100 + static_cast<std::uint64_t>(c));
    SymbolFrame frame = random_symbol_frame(num_symbols, cfg.wdm.qam_order, cfg.wdm.symbol_rate_hz, rng);
    DualPolWaveform w = rrc_shape(frame, Rational(sps_sim), cfg.wdm.rolloff, cfg.rrc_span_symbols);
    const double s = std::sqrt(power_w / w.mean_power());
    for (auto& v : w.x) v *= s;
    for (auto& v : w.y) v *= s;
    channels.push_back(std::move(w));
    if (c == centre_index) centre = std::move(frame);
  }
  DualPolWaveform tx = wdm_mux(channels, cfg.wdm.channel_spacing_hz);
  channels.clear();
  Rng noise(seed, 1);
  DualPolWaveform rx = run_link(tx, cfg.link, noise);
  rx = wdm_demux_center(rx, cfg.wdm.channel_spacing_hz);
  const Rational ratio(cfg.dbp.samples_per_symbol.num, cfg.dbp.samples_per_symbol.den * sps_sim);
  rx = resample(rx, ratio.num, ratio.den, (1.0 + cfg.wdm.rolloff) * cfg.wdm.symbol_rate_hz);

  TrainingSet out;
  out.rx = std::move(rx);
  out.tx = std::move(centre);
  out.rolloff = cfg.wdm.rolloff;
  out.rrc_span_symbols = cfg.rrc_span_symbols;
  out.edge_trim_symbols = std::min(cfg.edge_trim_symbols(), num_symbols / 4);
  return out;
}

DbpConfig make_dbp_config(const ExperimentConfig& cfg, int num_steps, int num_subbands, double rho) {
  DbpConfig d;
  d.num_steps = num_steps;
  d.num_subbands = num_subbands;
  d.splitting_ratio = rho;
  d.blocking.block_length = cfg.dbp.block_length;
  d.blocking.overlap = cfg.overlap();
  d.blocking.samples_per_symbol = cfg.dbp.samples_per_symbol;
  d.beta2_ps2_per_km = cfg.link.fiber.beta2_ps2_per_km();
  d.total_length_km = cfg.link.total_length_km();
  d.coefficients = NlprCoefficients(num_subbands, cfg.dbp.intra_half_width, cfg.dbp.inter_half_width);
  return d;
}

double receiver_rms_per_2d(const ExperimentConfig& cfg, const std::string& kind, int num_steps, int num_subbands) {
  const auto n = cfg.dbp.samples_per_symbol;
  const auto big_n = cfg.dbp.block_length;
  const auto ov = cfg.overlap();
  if (kind == "edc") return rms_per_2d(n, big_n, ov, 0, 1);
  return rms_per_2d(n, big_n, ov, num_steps, num_subbands);
}

namespace {

// The block knobs shared by every row, so rms_per_2d can be recomputed.
void write_blocking_comment(std::ostream& os, const ExperimentConfig& cfg) {
  os << "# n=" << cfg.dbp.samples_per_symbol.num << '/' << cfg.dbp.samples_per_symbol.den << " N=" << cfg.dbp.block_length
     << " N_ov=" << cfg.overlap() << " realizations=" << cfg.realizations << '\n';
}

}  // namespace

void write_results_csv(std::ostream& os, const std::vector<ResultRow>& rows, const ExperimentConfig* cfg) {
  os << "# schema=1\n";
  if (cfg) write_blocking_comment(os, *cfg);
  os << "receiver_kind,N_st,N_sb,rho,power_dbm,snr_db,rms_per_2d,seed,wall_time_s,note\n";
  for (const auto& r : rows) {
    os << r.receiver_kind << ',' << r.num_steps << ',' << r.num_subbands << ',' << format_double(r.rho) << ','
       << format_double(r.power_dbm) << ',' << format_double(r.snr_db) << ',' << format_double(r.rms_per_2d) << ',' << r.seed
       << ',' << (r.wall_time_s >= 0.0 ? format_double(r.wall_time_s) : std::string()) << ',' << r.note << '\n';
  }
}

std::vector<Realization> make_realizations(const ExperimentConfig& cfg, double power_dbm, std::size_t power_index) {
  std::vector<Realization> out;
  for (int k = 0; k < cfg.realizations; ++k) {
    const auto idx = static_cast<std::uint64_t>(k);
    Realization r;
    r.train = simulate_record(cfg, power_dbm, cfg.train_symbols, derive_seed(cfg.rng_seed, {1, power_index, idx}));
    r.eval = simulate_record(cfg, power_dbm, cfg.num_symbols, derive_seed(cfg.rng_seed, {2, power_index, idx}));
    out.push_back(std::move(r));
  }
  return out;
}

namespace {

NlprCoefficients coefficients_for(const ExperimentConfig& cfg, const DbpConfig& d, const TrainingSet& train) {
  const std::string& mode = cfg.dbp.coefficients;
  if (mode == "zero") return d.coefficients;
  if (mode == "optimize") return optimize_coefficients(train, d, cfg.optimizer).coefficients;
  std::ifstream in(mode);
  if (!in) throw ConfigError("config /dbp/coefficients: cannot open " + mode);
  NlprCoefficients c = read_coefficients(in);
  if (c.num_subbands() != d.num_subbands)
    throw ConfigError("config /dbp/coefficients: file has " + std::to_string(c.num_subbands()) + " bands, grid needs " +
                      std::to_string(d.num_subbands));
  return c;
}

double snr_of(const TrainingSet& eval, const DualPolWaveform& out) {
  const SymbolFrame y = matched_filter_and_sample(out, eval.tx.symbol_rate, eval.rolloff, eval.rrc_span_symbols);
  const SnrReport r = snr_estimate(y, eval.tx, eval.edge_trim_symbols);
  if (!std::isfinite(r.snr_db)) throw NumericalError("non-finite SNR");
  return r.snr_db;
}

// SNR of one receiver configuration on one realization.
double receiver_snr(const ExperimentConfig& cfg, const std::string& kind, DbpConfig d, const Realization& data) {
  if (kind == "edc") return snr_of(data.eval, edc(data.eval.rx, d.beta2_ps2_per_km * d.total_length_km, d.blocking));
  if (kind == "ssfm-dbp")
    return snr_of(data.eval, ssfm_dbp(data.eval.rx, cfg.link, cfg.dbp.ideal_steps_per_span * cfg.link.num_spans, d.blocking));
  if (kind == "subband-ssfm-dbp")
    return snr_of(data.eval, subband_ssfm_dbp(data.eval.rx, cfg.link, cfg.dbp.ideal_steps_per_span * cfg.link.num_spans,
                                              cfg.dbp.ideal_subbands, d.blocking));
  d.coefficients = coefficients_for(cfg, d, data.train);
  return evaluate_snr(data.eval, d).snr_db;
}

struct Knobs {
  std::string kind;
  int num_steps;
  int num_subbands;
  double rho;
};

std::vector<Knobs> receiver_grid(const ExperimentConfig& cfg, bool with_rho) {
  std::vector<Knobs> out;
  const int ideal_steps = cfg.dbp.ideal_steps_per_span * cfg.link.num_spans;
  for (const auto& kind : cfg.dbp.receivers) {
    if (kind == "edc") {
      out.push_back({kind, 0, 1, 0.5});
    } else if (kind == "ssfm-dbp") {
      out.push_back({kind, ideal_steps, 1, 0.5});
    } else if (kind == "subband-ssfm-dbp") {
      out.push_back({kind, ideal_steps, cfg.dbp.ideal_subbands, 0.5});
    } else if (kind == "essfm") {
      for (int nst : cfg.dbp.num_steps) out.push_back({kind, nst, 1, 0.5});
    } else {
      for (int nst : cfg.dbp.num_steps)
        for (int nsb : cfg.dbp.num_subbands) {
          if (with_rho)
            for (double rho : cfg.dbp.splitting_ratio) out.push_back({kind, nst, nsb, rho});
          else
            out.push_back({kind, nst, nsb, 0.5});
        }
    }
  }
  return out;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

std::vector<ResultRow> run_simulate(const ExperimentConfig& cfg) {
  cfg.validate();
  std::vector<ResultRow> rows;
  const auto grid = receiver_grid(cfg, true);
  for (std::size_t pi = 0; pi < cfg.power_grid_dbm.size(); ++pi) {
    const double power = cfg.power_grid_dbm[pi];
    const auto data = make_realizations(cfg, power, pi);
    for (const auto& k : grid) {
      const auto t0 = std::chrono::steady_clock::now();
      ResultRow row{k.kind, k.num_steps, k.num_subbands, k.rho, power, 0.0, 0.0, derive_seed(cfg.rng_seed, {2, pi, 0}), -1.0, ""};
      row.rms_per_2d = receiver_rms_per_2d(cfg, k.kind, k.num_steps, k.num_subbands);
      try {
        double acc = 0.0;
        const int nst = k.kind == "edc" || k.kind == "ssfm-dbp" || k.kind == "subband-ssfm-dbp" ? 1 : k.num_steps;
        for (const auto& d : data) acc += receiver_snr(cfg, k.kind, make_dbp_config(cfg, nst, k.num_subbands, k.rho), d);
        row.snr_db = acc / static_cast<double>(data.size());
      } catch (const NumericalError& e) {
        row.snr_db = std::numeric_limits<double>::quiet_NaN();
        row.note = std::string("numerical-failure: ") + e.what();
      }
      if (cfg.record_wall_time) row.wall_time_s = seconds_since(t0);
      rows.push_back(row);
    }
  }
  return rows;
}

std::vector<RhoSweepRow> run_sweep_rho(const ExperimentConfig& cfg) {
  cfg.validate();
  const auto data = make_realizations(cfg, cfg.sweep.launch_power_dbm, 1000);
  const auto grid = cfg.sweep.grid();
  std::vector<RhoSweepRow> out;
  for (int nst : cfg.dbp.num_steps)
    for (int nsb : cfg.dbp.num_subbands) {
      RhoSweepRow row;
      row.num_steps = nst;
      row.num_subbands = nsb;
      row.power_dbm = cfg.sweep.launch_power_dbm;
      row.result = sweep_splitting_ratio(grid, make_dbp_config(cfg, nst, nsb, 0.5), data, cfg.optimizer, cfg.sweep.refine_step,
                                         cfg.sweep.refine_points);
      out.push_back(std::move(row));
    }
  return out;
}

void write_rho_csv(std::ostream& os, const ExperimentConfig& cfg, const std::vector<RhoSweepRow>& rows) {
  os << "# schema=1\n";
  write_blocking_comment(os, cfg);
  os << "N_st,N_sb,rho,power_dbm,snr_db,rms_per_2d,seed,is_best\n";
  for (const auto& r : rows)
    for (const auto& p : r.result.points)
      os << r.num_steps << ',' << r.num_subbands << ',' << format_double(p.rho) << ',' << format_double(r.power_dbm) << ','
         << format_double(p.snr_db) << ',' << format_double(receiver_rms_per_2d(cfg, "cb-essfm", r.num_steps, r.num_subbands))
         << ',' << cfg.rng_seed << ',' << (p.rho == r.result.best_rho ? 1 : 0) << '\n';
}

std::vector<ResultRow> run_snr_vs_complexity(const ExperimentConfig& cfg) {
  cfg.validate();
  const auto grid = receiver_grid(cfg, false);
  const auto rhos = cfg.sweep.grid();
  // snr[config][power], rho[config][power]
  std::vector<std::vector<double>> snr(grid.size()), best_rho(grid.size());
  std::vector<double> wall(grid.size(), 0.0);
  for (std::size_t pi = 0; pi < cfg.power_grid_dbm.size(); ++pi) {
    const auto data = make_realizations(cfg, cfg.power_grid_dbm[pi], pi);
    for (std::size_t g = 0; g < grid.size(); ++g) {
      const auto& k = grid[g];
      const auto t0 = std::chrono::steady_clock::now();
      double value = 0.0, rho = 0.5;
      if (k.kind == "cb-essfm" && cfg.dbp.coefficients == "optimize") {
        const auto sweep = sweep_splitting_ratio(rhos, make_dbp_config(cfg, k.num_steps, k.num_subbands, 0.5), data, cfg.optimizer,
                                                 cfg.sweep.refine_step, cfg.sweep.refine_points);
        value = sweep.best_snr_db;
        rho = sweep.best_rho;
      } else {
        const int nst = k.kind == "edc" || k.kind == "ssfm-dbp" || k.kind == "subband-ssfm-dbp" ? 1 : k.num_steps;
        for (const auto& d : data) value += receiver_snr(cfg, k.kind, make_dbp_config(cfg, nst, k.num_subbands, 0.5), d);
        value /= static_cast<double>(data.size());
      }
      snr[g].push_back(value);
      best_rho[g].push_back(rho);
      wall[g] += seconds_since(t0);
    }
  }
  std::vector<ResultRow> rows;
  for (std::size_t g = 0; g < grid.size(); ++g) {
    const auto& k = grid[g];
    ResultRow row{k.kind, k.num_steps, k.num_subbands, 0.5, 0.0, 0.0, 0.0, cfg.rng_seed, -1.0, ""};
    row.rms_per_2d = receiver_rms_per_2d(cfg, k.kind, k.num_steps, k.num_subbands);
    const auto idx = static_cast<std::size_t>(std::max_element(snr[g].begin(), snr[g].end()) - snr[g].begin());
    row.rho = best_rho[g][idx];
    if (cfg.power_grid_dbm.size() >= 3) {
      const auto sweep = sweep_launch_power(cfg.power_grid_dbm, [&](double p) {
        const auto i = static_cast<std::size_t>(std::find(cfg.power_grid_dbm.begin(), cfg.power_grid_dbm.end(), p) -
                                                cfg.power_grid_dbm.begin());
        return snr[g][i];
      });
      row.power_dbm = sweep.best_power_dbm;
      row.snr_db = sweep.best_snr_db;
      if (sweep.at_edge) row.note = "optimum-at-grid-edge";
    } else {
      row.power_dbm = cfg.power_grid_dbm[idx];
      row.snr_db = snr[g][idx];
    }
    if (cfg.record_wall_time) row.wall_time_s = wall[g];
    rows.push_back(row);
  }
  return rows;
}

OptimizationResult run_optimize_coeffs(const ExperimentConfig& cfg, int num_steps, int num_subbands, double rho) {
  cfg.validate();
  const TrainingSet train =
      simulate_record(cfg, cfg.sweep.launch_power_dbm, cfg.train_symbols, derive_seed(cfg.rng_seed, {1, 1000, 0}));
  return optimize_coefficients(train, make_dbp_config(cfg, num_steps, num_subbands, rho), cfg.optimizer);
}

}  // namespace cbdbp
