#include "xag/config.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "xag/errors.hpp"

namespace xag {

namespace {

std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string trim(std::string_view s) {
  std::size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string_view::npos) return "";
  std::size_t b = s.find_last_not_of(" \t\r");
  return std::string(s.substr(a, b - a + 1));
}

double parse_double(const std::string& key, const std::string& val) {
  try {
    std::size_t pos = 0;
    double v = std::stod(val, &pos);
    if (pos != val.size()) throw std::invalid_argument(val);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("config: key '" + key + "' has non-numeric value '" + val + "'");
  }
}

int parse_int(const std::string& key, const std::string& val) {
  try {
    std::size_t pos = 0;
    int v = std::stoi(val, &pos);
    if (pos != val.size()) throw std::invalid_argument(val);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("config: key '" + key + "' has non-integer value '" + val + "'");
  }
}

std::uint64_t parse_u64(const std::string& key, const std::string& val) {
  try {
    std::size_t pos = 0;
    std::uint64_t v = std::stoull(val, &pos);
    if (pos != val.size()) throw std::invalid_argument(val);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("config: key '" + key + "' has non-integer value '" + val + "'");
  }
}

void validate(const RunConfig& c) {
  if (c.data.n_patches < 1) throw ConfigError("config: n_patches must be >= 1");
  if (c.data.num_ids < 4) throw ConfigError("config: num_ids must be >= 4");
  if (c.data.images_per_id < 1 || c.data.texts_per_id < 1)
    throw ConfigError("config: per-identity counts must be >= 1");
  if (c.data.image_noise < 0 || c.data.text_noise < 0)
    throw ConfigError("config: noise scales must be >= 0");
  if (c.data.text_mixing < 0 || c.data.text_mixing > 1)
    throw ConfigError("config: text_mixing must lie in [0, 1]");
  if (c.data.input_dim < 1 || c.feat_dim < 1 || c.data.patch_subvectors < 1 ||
      c.data.text_tokens < 1)
    throw ConfigError("config: dims must be >= 1");
  if (c.batch_size < 1) throw ConfigError("config: batch_size must be >= 1");
  if (c.stage1_iterations < 1 || c.stage2_iterations < 1 || c.stage3_iterations < 1)
    throw ConfigError("config: iteration counts must be >= 1");
  if (c.stage1_lr <= 0 || c.stage2_lr <= 0 || c.stage3_lr <= 0)
    throw ConfigError("config: learning rates must be > 0");
  if (c.weights.epsilon <= 0) throw ConfigError("config: epsilon must be > 0");
  if (c.output_dir.empty()) throw ConfigError("config: output_dir must be set");
}

}  // namespace

RunConfig parse_run_config_text(std::string_view text) {
  RunConfig cfg;
  std::istringstream is{std::string(text)};
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    auto eq = t.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config line " + std::to_string(lineno) + " lacks '='");
    std::string key = trim(t.substr(0, eq));
    std::string val = trim(t.substr(eq + 1));

    if (key == "num_ids") cfg.data.num_ids = parse_int(key, val);
    else if (key == "images_per_id") cfg.data.images_per_id = parse_int(key, val);
    else if (key == "texts_per_id") cfg.data.texts_per_id = parse_int(key, val);
    else if (key == "image_noise") cfg.data.image_noise = parse_double(key, val);
    else if (key == "text_noise") cfg.data.text_noise = parse_double(key, val);
    else if (key == "text_mixing") cfg.data.text_mixing = parse_double(key, val);
    else if (key == "n_patches") cfg.data.n_patches = parse_int(key, val);
    else if (key == "input_dim") cfg.data.input_dim = parse_int(key, val);
    else if (key == "feat_dim") cfg.feat_dim = parse_int(key, val);
    else if (key == "patch_subvectors") cfg.data.patch_subvectors = parse_int(key, val);
    else if (key == "text_tokens") cfg.data.text_tokens = parse_int(key, val);
    else if (key == "batch_size") cfg.batch_size = parse_int(key, val);
    else if (key == "stage1_iterations") cfg.stage1_iterations = parse_int(key, val);
    else if (key == "stage2_iterations") cfg.stage2_iterations = parse_int(key, val);
    else if (key == "stage3_iterations") cfg.stage3_iterations = parse_int(key, val);
    else if (key == "stage1_lr") cfg.stage1_lr = parse_double(key, val);
    else if (key == "stage2_lr") cfg.stage2_lr = parse_double(key, val);
    else if (key == "stage3_lr") cfg.stage3_lr = parse_double(key, val);
    else if (key == "lambda1") cfg.weights.lambda1 = parse_double(key, val);
    else if (key == "lambda2") cfg.weights.lambda2 = parse_double(key, val);
    else if (key == "epsilon") cfg.weights.epsilon = parse_double(key, val);
    else if (key == "seed") cfg.seed = parse_u64(key, val);
    else if (key == "output_dir") cfg.output_dir = val;
    else throw ConfigError("config: unknown key '" + key + "'");
  }
  cfg.data.seed = cfg.seed;
  validate(cfg);
  return cfg;
}

RunConfig parse_run_config(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ConfigError("cannot open config file " + path.string());
  std::ostringstream buf;
  buf << is.rdbuf();
  return parse_run_config_text(buf.str());
}

std::string config_echo(const RunConfig& c) {
  std::ostringstream os;
  os << "num_ids=" << c.data.num_ids << '\n'
     << "images_per_id=" << c.data.images_per_id << '\n'
     << "texts_per_id=" << c.data.texts_per_id << '\n'
     << "image_noise=" << fmt_double(c.data.image_noise) << '\n'
     << "text_noise=" << fmt_double(c.data.text_noise) << '\n'
     << "text_mixing=" << fmt_double(c.data.text_mixing) << '\n'
     << "n_patches=" << c.data.n_patches << '\n'
     << "input_dim=" << c.data.input_dim << '\n'
     << "feat_dim=" << c.feat_dim << '\n'
     << "patch_subvectors=" << c.data.patch_subvectors << '\n'
     << "text_tokens=" << c.data.text_tokens << '\n'
     << "batch_size=" << c.batch_size << '\n'
     << "stage1_iterations=" << c.stage1_iterations << '\n'
     << "stage2_iterations=" << c.stage2_iterations << '\n'
     << "stage3_iterations=" << c.stage3_iterations << '\n'
     << "stage1_lr=" << fmt_double(c.stage1_lr) << '\n'
     << "stage2_lr=" << fmt_double(c.stage2_lr) << '\n'
     << "stage3_lr=" << fmt_double(c.stage3_lr) << '\n'
     << "lambda1=" << fmt_double(c.weights.lambda1) << '\n'
     << "lambda2=" << fmt_double(c.weights.lambda2) << '\n'
     << "epsilon=" << fmt_double(c.weights.epsilon) << '\n'
     << "seed=" << c.seed << '\n'
     << "output_dir=" << c.output_dir.string() << '\n';
  return os.str();
}

Sha256 config_hash(const RunConfig& cfg) { return sha256(config_echo(cfg)); }

StageConfig stage_config(const RunConfig& cfg, int stage) {
  StageConfig s;
  s.stage = stage;
  s.weights = cfg.weights;
  s.batch_size = cfg.batch_size;
  s.seed = cfg.seed;
  switch (stage) {
    case 0:
    case 1:
      s.iterations = cfg.stage1_iterations;
      s.lr = cfg.stage1_lr;
      break;
    case 2:
      s.iterations = cfg.stage2_iterations;
      s.lr = cfg.stage2_lr;
      break;
    case 3:
      s.iterations = cfg.stage3_iterations;
      s.lr = cfg.stage3_lr;
      break;
    default:
      throw ConfigError("stage must be 1, 2, or 3");
  }
  return s;
}

ModelDims model_dims(const RunConfig& cfg) { return ModelDims{cfg.feat_dim, 2}; }

}  // namespace xag
