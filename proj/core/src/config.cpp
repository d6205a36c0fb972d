#include "adcnn/config.hpp"

#include <charconv>
#include <cstdio>
#include <sstream>

#include "adcnn/byte_io.hpp"
#include "adcnn/errors.hpp"

namespace adcnn {

namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

std::uint64_t parse_u64(const std::string& key, const std::string& value) {
  std::uint64_t out = 0;
  const auto [end, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc{} || end != value.data() + value.size()) {
    throw ConfigError(key + ": expected a non-negative integer, got '" + value + "'");
  }
  return out;
}

double parse_double(const std::string& key, const std::string& value) {
  std::size_t used = 0;
  double out = 0;
  try {
    out = std::stod(value, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != value.size()) {
    throw ConfigError(key + ": expected a number, got '" + value + "'");
  }
  return out;
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1" || value == "yes") return true;
  if (value == "false" || value == "0" || value == "no") return false;
  throw ConfigError(key + ": expected true/false, got '" + value + "'");
}

std::vector<int> parse_variants(const std::string& key, const std::string& value) {
  std::vector<int> out;
  std::stringstream in(value);
  std::string item;
  while (std::getline(in, item, ',')) {
    const std::string t = trim(item);
    if (t.empty()) continue;
    out.push_back(static_cast<int>(parse_u64(key, t)));
  }
  return out;
}

std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string fmt_bool(bool v) { return v ? "true" : "false"; }

}  // namespace

std::string hex64(std::uint64_t value) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(value));
  return buf;
}

void ExperimentConfig::validate() const {
  if (epochs < 1) throw ConfigError("epochs must be >= 1");
  if (repeats < 1) throw ConfigError("repeats must be >= 1");
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (variants.empty()) throw ConfigError("variants must not be empty");
  for (std::size_t i = 0; i < variants.size(); ++i) {
    if (!is_valid_variant(variants[i])) {
      throw ConfigError("variant " + std::to_string(variants[i]) + " is not one of 0, 2, 3, 4");
    }
    for (std::size_t j = 0; j < i; ++j) {
      if (variants[j] == variants[i]) throw ConfigError("variant listed twice");
    }
  }
  if (hidden_width < 1) throw ConfigError("hidden_width must be >= 1");
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
    throw ConfigError("test_fraction must lie in (0, 1)");
  }
  try {
    sgd.validate();
    phantom.validate();
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError(e.what());
  }
}

TrainOptions ExperimentConfig::train_options(std::uint64_t run_seed) const {
  TrainOptions o;
  o.spec = layer_spec();
  o.sgd = sgd;
  o.epochs = epochs;
  o.batch_size = batch_size;
  o.seed = run_seed;
  return o;
}

std::string ExperimentConfig::serialize() const {
  std::string variants_text;
  for (std::size_t i = 0; i < variants.size(); ++i) {
    if (i) variants_text += ",";
    variants_text += std::to_string(variants[i]);
  }
  std::ostringstream out;
  out << "epochs = " << epochs << "\n"
      << "repeats = " << repeats << "\n"
      << "batch_size = " << batch_size << "\n"
      << "variants = " << variants_text << "\n"
      << "balanced = " << fmt_bool(balanced) << "\n"
      << "seed = " << seed << "\n"
      << "base_lr = " << fmt_double(sgd.base_lr) << "\n"
      << "momentum = " << fmt_double(sgd.momentum) << "\n"
      << "weight_decay = " << fmt_double(sgd.weight_decay) << "\n"
      << "gamma = " << fmt_double(sgd.gamma) << "\n"
      << "stepsize = " << sgd.stepsize << "\n"
      << "hidden_width = " << hidden_width << "\n"
      << "test_fraction = " << fmt_double(test_fraction) << "\n"
      << "balance_target = " << balance_target << "\n"
      << "subject_level_split = " << fmt_bool(subject_level_split) << "\n"
      << "dataset_dir = " << dataset_dir << "\n"
      << "out_dir = " << out_dir << "\n"
      << "drop_last = " << slices.drop_last << "\n"
      << "drop_end = " << (slices.drop_end == DropEnd::HighIndex ? "high" : "low") << "\n"
      << "per_volume_scaling = " << fmt_bool(per_volume_scaling) << "\n"
      << "phantom.subjects_ad = " << phantom.subjects_ad << "\n"
      << "phantom.subjects_nc = " << phantom.subjects_nc << "\n"
      << "phantom.nx = " << phantom.nx << "\n"
      << "phantom.ny = " << phantom.ny << "\n"
      << "phantom.nz = " << phantom.nz << "\n"
      << "phantom.voxel_mm = " << fmt_double(phantom.voxel_mm) << "\n"
      << "phantom.effect_size = " << fmt_double(phantom.effect_size) << "\n"
      << "phantom.noise_sigma = " << fmt_double(phantom.noise_sigma) << "\n"
      << "phantom.jitter = " << fmt_double(phantom.jitter) << "\n"
      << "phantom.seed = " << phantom.seed << "\n";
  return out.str();
}

std::string ExperimentConfig::hash() const { return hex64(fnv1a64(serialize())); }

void apply_config_value(ExperimentConfig& c, const std::string& key, const std::string& value) {
  const auto u = [&] { return parse_u64(key, value); };
  const auto d = [&] { return parse_double(key, value); };
  const auto b = [&] { return parse_bool(key, value); };
  if (key == "epochs") c.epochs = u();
  else if (key == "repeats") c.repeats = u();
  else if (key == "batch_size") c.batch_size = u();
  else if (key == "variants") c.variants = parse_variants(key, value);
  else if (key == "balanced") c.balanced = b();
  else if (key == "seed") c.seed = u();
  else if (key == "base_lr") c.sgd.base_lr = d();
  else if (key == "momentum") c.sgd.momentum = d();
  else if (key == "weight_decay") c.sgd.weight_decay = d();
  else if (key == "gamma") c.sgd.gamma = d();
  else if (key == "stepsize") c.sgd.stepsize = u();
  else if (key == "hidden_width") c.hidden_width = u();
  else if (key == "test_fraction") c.test_fraction = d();
  else if (key == "balance_target") c.balance_target = u();
  else if (key == "subject_level_split") c.subject_level_split = b();
  else if (key == "dataset_dir") c.dataset_dir = value;
  else if (key == "out_dir") c.out_dir = value;
  else if (key == "drop_last") c.slices.drop_last = u();
  else if (key == "drop_end") {
    if (value == "high") c.slices.drop_end = DropEnd::HighIndex;
    else if (value == "low") c.slices.drop_end = DropEnd::LowIndex;
    else throw ConfigError("drop_end: expected high or low, got '" + value + "'");
  }
  else if (key == "per_volume_scaling") c.per_volume_scaling = b();
  else if (key == "phantom.subjects_ad") c.phantom.subjects_ad = u();
  else if (key == "phantom.subjects_nc") c.phantom.subjects_nc = u();
  else if (key == "phantom.nx") c.phantom.nx = u();
  else if (key == "phantom.ny") c.phantom.ny = u();
  else if (key == "phantom.nz") c.phantom.nz = u();
  else if (key == "phantom.voxel_mm") c.phantom.voxel_mm = d();
  else if (key == "phantom.effect_size") c.phantom.effect_size = d();
  else if (key == "phantom.noise_sigma") c.phantom.noise_sigma = d();
  else if (key == "phantom.jitter") c.phantom.jitter = d();
  else if (key == "phantom.seed") c.phantom.seed = u();
  else throw ConfigError("unknown config key '" + key + "'");
}

ExperimentConfig parse_config(std::string_view text) {
  ExperimentConfig config;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const std::string t = trim(line);
    if (t.empty()) continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("line " + std::to_string(lineno) + ": expected 'key = value'");
    }
    const std::string key = trim(std::string_view(t).substr(0, eq));
    const std::string value = trim(std::string_view(t).substr(eq + 1));
    if (key.empty()) throw ConfigError("line " + std::to_string(lineno) + ": empty key");
    apply_config_value(config, key, value);
  }
  config.validate();
  return config;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  const auto bytes = read_file(path);
  return parse_config(std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
}

}  // namespace adcnn
