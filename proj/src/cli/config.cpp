#include "platelab/cli/config.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "platelab/core/errors.hpp"

namespace platelab::cli {

namespace fs = std::filesystem;

const std::vector<KeyInfo>& config_keys() {
  static const std::vector<KeyInfo> keys{
      {"geometry.file", "", "geometry file (required; see docs/file_formats.md)"},
      {"material.file", "", "material file (required)"},
      {"couple.type", "default", "default (cos^2 bump on the middle third of Sigma) or file"},
      {"couple.samples", "2048", "samples of the default couple field"},
      {"couple.amplitude", "1", "amplitude of the default couple field"},
      {"couple.file", "", "couple CSV (arc_length_fraction,m_n,m_tau) when couple.type = file"},
      {"solver.resolution", "64", "grid cells per r0, in [8, 512]"},
      {"solver.ghost_penalty", "20", "ghost penalty weight on third differences"},
      {"solver.active_band", "3", "width of the ghost band in cells"},
      {"solver.min_clearance_cells", "8", "minimal clearance between inclusion and boundary, in cells"},
      {"solver.relative_tolerance", "1e-10", "linear solve tolerance"},
      {"solver.constraint_tolerance", "1e-12", "relative violation of the clamping constraints"},
      {"solver.constraint_penalty", "1000", "augmented Lagrangian weight relative to max diag K"},
      {"solver.direct", "true", "sparse Cholesky first (false: conjugate gradients only)"},
      {"solver.max_iterations", "50000", "conjugate gradient iteration cap"},
      {"traces.samples", "256", "trace samples on Sigma"},
      {"traces.noise", "0", "relative noise added to synthesized traces"},
      {"forward.energy_levels", "", "extra resolutions for the energy estimate report"},
      {"invert.k_modes", "2", "Fourier modes of the searched inclusion (parameters 3 + 2K)"},
      {"invert.budget", "500", "forward solves shared by all restarts"},
      {"invert.restarts", "3", "seeded random restarts after the first simplex run"},
      {"invert.seed", "seed", "restart seed"},
      {"invert.data_resolution_factor", "2", "data resolution / inversion resolution for synthesized data"},
      {"invert.init", "", "initial parameters cx, cy, a0, a1, b1, ... (default: disc at the domain centre)"},
      {"invert.truth", "", "true parameters (default: inclusion of the geometry file)"},
      {"invert.data", "", "trace CSV to invert instead of synthesized data"},
      {"sweep.family", "dilation", "dilation or translation of the geometry inclusion"},
      {"sweep.sizes", "0.02 .. 0.2 (8, geometric)", "perturbation sizes"},
      {"sweep.direction", "1, 0", "translation direction"},
      {"sweep.data_resolution_factor", "2", "base (data) resolution / perturbed resolution"},
      {"sweep.noise", "0", "relative noise on the base traces (seed + pair id)"},
      {"verify.point", "point of largest clearance", "interior point x for 3sph and fvr-int"},
      {"verify.radii", "0.1, 0.2, 0.4", "r1, r2, r3 for 3sph"},
      {"verify.ladder", "0.05, 0.0707, 0.1, 0.1414, 0.2", "interior radius ladder"},
      {"verify.boundary_ladder", "0.06, 0.085, 0.12, 0.17, 0.24", "boundary radius ladder (below c_bar r0)"},
      {"verify.fractions", "0, 0.25, 0.5, 0.75", "points on the inclusion boundary (curve fractions)"},
      {"verify.rhos", "0.05, 0.1, 0.2, 0.4", "disc radii for lps"},
      {"verify.max_centers", "400", "disc centres sampled per radius for lps"},
      {"verify.c0", "0.9", "trial c0"},
      {"verify.c_bar", "0.25", "trial c_bar"},
      {"verify.c_bar0", "0.25", "trial c_bar0"},
      {"verify.s", "1.5", "trial s"},
      {"verify.C", "0", "trial exponent constant"},
      {"output.dir", "<config name>.out", "experiment directory"},
      {"seed", "0", "global seed"},
  };
  return keys;
}

std::string config_help() {
  std::ostringstream out;
  out << "Config keys (key = value, [section] prefixes, '#' comments):\n";
  for (const auto& k : config_keys()) {
    out << "  " << k.key;
    for (std::size_t pad = k.key.size(); pad < 30; ++pad) out << ' ';
    out << k.help;
    if (!k.fallback.empty()) out << " [" << k.fallback << "]";
    out << "\n";
  }
  return out.str();
}

namespace {

fs::path resolve(const fs::path& base, const std::string& p) {
  const fs::path path(p);
  return path.is_absolute() ? path : base / path;
}

fs::path existing_file(const KeyValueDocument& doc, const std::string& key, const fs::path& base) {
  if (!doc.has(key)) throw ConfigError("missing required key '" + key + "'");
  const auto path = resolve(base, doc.get_string(key));
  if (!fs::is_regular_file(path)) throw ConfigError(key + ": file '" + path.string() + "' does not exist");
  return path;
}

long ranged_int(const KeyValueDocument& doc, const std::string& key, long fallback, long lo, long hi) {
  const long v = doc.get_int(key, fallback);
  if (v < lo || v > hi) {
    throw ConfigError(key + " = " + std::to_string(v) + " is outside [" + std::to_string(lo) + ", " +
                      std::to_string(hi) + "]");
  }
  return v;
}

double ranged(const KeyValueDocument& doc, const std::string& key, double fallback, double lo, double hi) {
  const double v = doc.get_double(key, fallback);
  if (!(v >= lo && v <= hi)) {
    throw ConfigError(key + " = " + format_double(v) + " is outside [" + format_double(lo) + ", " +
                      format_double(hi) + "]");
  }
  return v;
}

std::vector<double> positive_list(const KeyValueDocument& doc, const std::string& key,
                                  const std::vector<double>& fallback) {
  auto v = doc.get_doubles(key, fallback);
  for (double x : v) {
    if (!(x > 0.0) || !std::isfinite(x)) throw ConfigError(key + ": values must be positive");
  }
  return v;
}

std::uint64_t seed_value(const KeyValueDocument& doc, const std::string& key, std::uint64_t fallback) {
  const long v = doc.get_int(key, static_cast<long>(fallback));
  if (v < 0) throw ConfigError(key + " must be nonnegative");
  return static_cast<std::uint64_t>(v);
}

}  // namespace

std::vector<fs::path> ExperimentConfig::inputs() const {
  std::vector<fs::path> files{path, geometry_file, material_file};
  if (couple_file) files.push_back(*couple_file);
  if (invert.data) files.push_back(*invert.data);
  return files;
}

ExperimentConfig config_from_document(const KeyValueDocument& doc, const fs::path& base) {
  std::set<std::string> known;
  for (const auto& k : config_keys()) known.insert(k.key);
  for (const auto& k : doc.keys()) {
    if (!known.count(k)) throw ConfigError(doc.source() + ": unknown key '" + k + "'");
  }
  const auto geometry_file = existing_file(doc, "geometry.file", base);
  const auto material_file = existing_file(doc, "material.file", base);
  auto geo = geometry::load_geometry(geometry_file);
  auto plate = material::load_material(material_file);
  std::optional<fs::path> couple_file;
  plate_solver::CoupleField couple;
  const auto couple_type = doc.get_string("couple.type", "default");
  if (couple_type == "default") {
    const long n = ranged_int(doc, "couple.samples", 2048, 64, 1 << 20);
    couple = plate_solver::default_couple(geo.domain, static_cast<std::size_t>(n), doc.get_double("couple.amplitude", 1.0));
  } else if (couple_type == "file") {
    couple_file = existing_file(doc, "couple.file", base);
    couple = plate_solver::read_couple_csv(*couple_file);
  } else {
    throw ConfigError("couple.type must be 'default' or 'file', got '" + couple_type + "'");
  }
  ExperimentConfig c(std::move(geo), std::move(plate), couple);
  c.document = doc;
  c.geometry_file = geometry_file;
  c.material_file = material_file;
  c.couple_file = couple_file;
  c.seed = seed_value(doc, "seed", 0);

  c.grid.resolution = ranged(doc, "solver.resolution", 64, 8, 512);
  c.grid.ghost_penalty = ranged(doc, "solver.ghost_penalty", 20, 0, 1e6);
  c.grid.active_band = ranged(doc, "solver.active_band", 3, 2, 8);
  c.grid.min_clearance_cells = ranged(doc, "solver.min_clearance_cells", 8, 0, 1e3);
  c.solver.relative_tolerance = ranged(doc, "solver.relative_tolerance", 1e-10, 1e-16, 1e-2);
  c.solver.constraint_tolerance = ranged(doc, "solver.constraint_tolerance", 1e-12, 1e-16, 1e-2);
  c.solver.constraint_penalty = ranged(doc, "solver.constraint_penalty", 1e3, 1e-3, 1e12);
  c.solver.direct = doc.get_bool("solver.direct", true);
  c.solver.max_iterations = static_cast<int>(ranged_int(doc, "solver.max_iterations", 50000, 1, 100000000));

  c.trace_samples = static_cast<std::size_t>(ranged_int(doc, "traces.samples", 256, 4, 1 << 20));
  c.trace_noise = ranged(doc, "traces.noise", 0, 0, 1);
  c.energy_levels = positive_list(doc, "forward.energy_levels", {});

  auto& inv = c.invert;
  inv.k_modes = static_cast<int>(ranged_int(doc, "invert.k_modes", 2, 0, 16));
  inv.budget = static_cast<int>(ranged_int(doc, "invert.budget", 500, 1, 1000000));
  inv.restarts = static_cast<int>(ranged_int(doc, "invert.restarts", 3, 0, 1000));
  inv.seed = seed_value(doc, "invert.seed", c.seed);
  inv.data_resolution_factor = ranged(doc, "invert.data_resolution_factor", 2, 1, 8);
  const auto n_params = static_cast<std::size_t>(3 + 2 * inv.k_modes);
  for (auto [key, target] : {std::pair{"invert.init", &inv.init}, std::pair{"invert.truth", &inv.truth}}) {
    if (!doc.has(key)) continue;
    *target = doc.get_doubles(key);
    if ((*target)->size() != n_params) {
      throw ConfigError(std::string(key) + ": expected " + std::to_string(n_params) + " parameters for k_modes = " +
                        std::to_string(inv.k_modes));
    }
  }
  if (doc.has("invert.data")) inv.data = existing_file(doc, "invert.data", base);

  auto& sw = c.sweep;
  sw.family = doc.get_string("sweep.family", "dilation");
  if (sw.family != "dilation" && sw.family != "translation") {
    throw ConfigError("sweep.family must be 'dilation' or 'translation', got '" + sw.family + "'");
  }
  std::vector<double> sizes;
  for (int k = 0; k < 8; ++k) sizes.push_back(0.02 * std::pow(10.0, k / 7.0));
  sw.sizes = doc.get_doubles("sweep.sizes", sizes);
  const auto dir = doc.get_doubles("sweep.direction", {1.0, 0.0});
  if (dir.size() != 2 || !(std::hypot(dir[0], dir[1]) > 0.0)) {
    throw ConfigError("sweep.direction expects two numbers, not both zero");
  }
  sw.direction = {dir[0], dir[1]};
  sw.data_resolution_factor = ranged(doc, "sweep.data_resolution_factor", 2, 1, 8);
  sw.noise = ranged(doc, "sweep.noise", 0, 0, 1);

  auto& v = c.verify;
  if (doc.has("verify.point")) {
    const auto p = doc.get_doubles("verify.point");
    if (p.size() != 2) throw ConfigError("verify.point expects two numbers");
    v.point = geometry::Vec2(p[0], p[1]);
  }
  v.radii = positive_list(doc, "verify.radii", {0.1, 0.2, 0.4});
  if (v.radii.size() != 3) throw ConfigError("verify.radii expects r1, r2, r3");
  v.ladder = positive_list(doc, "verify.ladder", {0.05, 0.0707, 0.1, 0.1414, 0.2});
  v.boundary_ladder = positive_list(doc, "verify.boundary_ladder", {0.06, 0.085, 0.12, 0.17, 0.24});
  v.fractions = doc.get_doubles("verify.fractions", {0.0, 0.25, 0.5, 0.75});
  v.rhos = positive_list(doc, "verify.rhos", {0.05, 0.1, 0.2, 0.4});
  v.max_centers = static_cast<std::size_t>(ranged_int(doc, "verify.max_centers", 400, 1, 1000000));
  v.trials.c0 = ranged(doc, "verify.c0", 0.9, 1e-6, 1e6);
  v.trials.c_bar = ranged(doc, "verify.c_bar", 0.25, 1e-6, 1e6);
  v.trials.c_bar0 = ranged(doc, "verify.c_bar0", 0.25, 1e-6, 1e6);
  v.trials.s = ranged(doc, "verify.s", 1.5, 1.0, 1e6);
  v.trials.C = ranged(doc, "verify.C", 0.0, -1e6, 1e6);

  c.output_dir = doc.has("output.dir") ? resolve(base, doc.get_string("output.dir")) : fs::path();
  return c;
}

ExperimentConfig load_config(const fs::path& path) {
  if (!fs::is_regular_file(path)) throw ConfigError("config file '" + path.string() + "' does not exist");
  auto c = config_from_document(KeyValueDocument::load(path), path.parent_path());
  c.path = path;
  if (c.output_dir.empty()) c.output_dir = path.parent_path() / (path.stem().string() + ".out");
  return c;
}

std::string sha256_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read '" + path.string() + "'");
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr);
  char buf[1 << 15];
  while (in.read(buf, sizeof buf) || in.gcount() > 0) EVP_DigestUpdate(ctx, buf, static_cast<std::size_t>(in.gcount()));
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx, md, &len);
  EVP_MD_CTX_free(ctx);
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[md[i] >> 4];
    out += hex[md[i] & 15];
  }
  return out;
}

std::string manifest_json(const std::vector<fs::path>& files) {
  nlohmann::ordered_json j;
  auto& list = j["inputs"] = nlohmann::ordered_json::array();
  for (const auto& f : files) list.push_back({{"path", f.filename().string()}, {"sha256", sha256_file(f)}});
  return j.dump(2);
}

}  // namespace platelab::cli
