#include "topseg/config.hpp"

#include "topseg/error.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <charconv>
#include <limits>
#include <functional>
#include <iomanip>
#include <map>
#include <sstream>

namespace topseg {

namespace {

namespace pt = boost::property_tree;

using Setter = std::function<void(const std::string&)>;
using Getter = std::function<std::string()>;

struct Field {
  Setter set;
  Getter get;
};

std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t\r");
  const auto e = s.find_last_not_of(" \t\r");
  s = b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
  if (s.size() >= 2 && (s.front() == '"' || s.front() == '\'') && s.back() == s.front()) {
    s = s.substr(1, s.size() - 2);
  }
  return s;
}

double to_double(const std::string& text) {
  const std::string s = trim(text);
  if (s == "inf" || s == "+inf") return std::numeric_limits<double>::infinity();
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) throw ConfigError("not a number: '" + text + "'");
  return v;
}

long long to_integer(const std::string& text) {
  const std::string s = trim(text);
  long long v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) throw ConfigError("not an integer: '" + text + "'");
  return v;
}

std::string show(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

Field real(double& x) {
  return {[&x](const std::string& s) { x = to_double(s); }, [&x] { return show(x); }};
}

Field integer(int& x) {
  return {[&x](const std::string& s) { x = static_cast<int>(to_integer(s)); }, [&x] { return std::to_string(x); }};
}

Field count(std::size_t& x) {
  return {[&x](const std::string& s) {
            const long long v = to_integer(s);
            if (v < 0) throw ConfigError("expected a nonnegative integer: '" + s + "'");
            x = static_cast<std::size_t>(v);
          },
          [&x] { return std::to_string(x); }};
}

Field seed(std::uint64_t& x) {
  return {[&x](const std::string& s) {
            const long long v = to_integer(s);
            if (v < 0) throw ConfigError("seed must be nonnegative");
            x = static_cast<std::uint64_t>(v);
          },
          [&x] { return std::to_string(x); }};
}

Field path(std::filesystem::path& x) {
  return {[&x](const std::string& s) { x = trim(s); }, [&x] { return "\"" + x.string() + "\""; }};
}

using Schema = std::map<std::string, std::map<std::string, Field>>;

Schema schema(RunConfig& c) {
  Schema s;
  auto& pre = s["preprocess"];
  pre["band_low"] = real(c.features.preprocess.band_low);
  pre["band_high"] = real(c.features.preprocess.band_high);
  pre["filter_order"] = integer(c.features.preprocess.filter_order);
  pre["target_rate_fine"] = real(c.features.preprocess.target_rate_fine);
  pre["target_rate_global"] = real(c.features.preprocess.target_rate_global);
  pre["chunk_seconds"] = real(c.features.preprocess.chunk_seconds);

  for (auto& scale : c.features.scales) {
    auto& sec = s["scales." + std::string(to_string(scale.name))];
    sec["stream_rate"] = real(scale.stream_rate);
    sec["tau"] = real(scale.tau);
    sec["dim"] = integer(scale.dim);
    sec["window_multiplier"] = real(scale.window_multiplier);
  }

  auto& feat = s["features"];
  feat["layers"] = count(c.features.landscape.layers);
  feat["grid_size"] = count(c.features.landscape.grid_size);
  feat["quantile"] = real(c.features.landscape.quantile);
  feat["frame_rate"] = real(c.features.frame_rate);

  auto& dec = s["decoder"];
  DecoderConfig& d = c.decoder;
  dec["arch"] = {[&d](const std::string& v) {
                   const std::string t = trim(v);
                   if (t == "tcn") {
                     d.arch = DecoderArch::kTcn;
                   } else if (t == "mlp") {
                     d.arch = DecoderArch::kMlp;
                   } else {
                     throw ConfigError("decoder.arch must be tcn or mlp");
                   }
                 },
                 [&d] { return std::string(d.arch == DecoderArch::kMlp ? "\"mlp\"" : "\"tcn\""); }};
  dec["channels"] = integer(d.channels);
  dec["kernel"] = integer(d.kernel);
  dec["dilations"] = {[&d](const std::string& v) {
                        std::string t = trim(v);
                        if (!t.empty() && t.front() == '[' && t.back() == ']') t = t.substr(1, t.size() - 2);
                        d.dilations.clear();
                        std::istringstream in(t);
                        std::string item;
                        while (std::getline(in, item, ',')) {
                          if (!trim(item).empty()) d.dilations.push_back(static_cast<int>(to_integer(item)));
                        }
                      },
                      [&d] {
                        std::string out = "[";
                        for (std::size_t i = 0; i < d.dilations.size(); ++i) {
                          out += (i ? ", " : "") + std::to_string(d.dilations[i]);
                        }
                        return out + "]";
                      }};
  dec["mlp_hidden"] = integer(d.mlp_hidden);
  dec["learning_rate"] = real(d.learning_rate);
  dec["momentum"] = real(d.momentum);
  dec["clip_norm"] = real(d.clip_norm);
  dec["epochs"] = integer(d.epochs);
  dec["batch"] = integer(d.batch);
  dec["chunk_frames"] = integer(d.chunk_frames);
  dec["patience"] = integer(d.patience);
  dec["seed"] = seed(d.seed);

  auto& ref = s["refine"];
  RefineConfig& r = c.refine;
  ref["lambda_s"] = real(r.lambda_s);
  ref["lambda_b"] = real(r.lambda_b);
  ref["lambda"] = real(r.lambda);
  ref["theta_max"] = real(r.theta_max);
  ref["n_iter"] = integer(r.n_iter);
  ref["gamma"] = real(r.gamma);
  ref["tau_thr"] = real(r.tau_thr);
  ref["rho"] = real(r.rho);
  ref["norm_window"] = real(r.norm_window);
  ref["reduction"] = {[&r](const std::string& v) {
                        const std::string t = trim(v);
                        if (t == "max") {
                          r.reduction = EpsilonReduction::kMax;
                        } else if (t == "mean") {
                          r.reduction = EpsilonReduction::kMean;
                        } else {
                          throw ConfigError("refine.reduction must be max or mean");
                        }
                      },
                      [&r] { return std::string(r.reduction == EpsilonReduction::kMean ? "\"mean\"" : "\"max\""); }};
  ref["step_size"] = {[&r](const std::string& v) {
                        const std::string t = trim(v);
                        if (t == "auto") {
                          r.step_size.reset();
                        } else {
                          r.step_size = to_double(t);
                        }
                      },
                      [&r] { return r.step_size ? show(*r.step_size) : std::string("\"auto\""); }};

  auto& dc = s["decode"];
  dc["min_s1"] = real(c.durations.minimum[index_of(HeartState::kS1)]);
  dc["min_systole"] = real(c.durations.minimum[index_of(HeartState::kSystole)]);
  dc["min_s2"] = real(c.durations.minimum[index_of(HeartState::kS2)]);
  dc["min_diastole"] = real(c.durations.minimum[index_of(HeartState::kDiastole)]);

  s["eval"]["tolerance"] = real(c.tolerance);

  auto& run = s["run"];
  run["budget"] = real(c.budget);
  run["validation_fraction"] = real(c.validation_fraction);
  run["seed"] = seed(c.seed);

  auto& paths = s["paths"];
  paths["data_dir"] = path(c.data_dir);
  paths["cache_dir"] = path(c.cache_dir);
  paths["model"] = path(c.model_path);
  paths["output_dir"] = path(c.output_dir);
  return s;
}

}  // namespace

void RunConfig::validate() const {
  features.validate();
  decoder.validate();
  refine.validate();
  durations.validate();
  if (!(tolerance >= 0.0)) throw ConfigError("eval.tolerance must be nonnegative");
  if (!(budget > 0.0 && budget <= 1.0)) throw ConfigError("run.budget must lie in (0, 1]");
  if (!(validation_fraction >= 0.0 && validation_fraction < 1.0)) {
    throw ConfigError("run.validation_fraction must lie in [0, 1)");
  }
}

void apply_config_file(const std::filesystem::path& file, RunConfig& cfg) {
  pt::ptree tree;
  try {
    pt::read_ini(file.string(), tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  Schema s = schema(cfg);
  for (const auto& [section, body] : tree) {
    if (body.empty() && !body.data().empty()) {
      throw ConfigError("config: key '" + section + "' outside of a section in " + file.string());
    }
    const auto sec = s.find(section);
    if (sec == s.end()) throw ConfigError("config: unknown section [" + section + "] in " + file.string());
    for (const auto& [key, value] : body) {
      const auto field = sec->second.find(key);
      if (field == sec->second.end()) {
        throw ConfigError("config: unknown key '" + key + "' in [" + section + "]");
      }
      try {
        field->second.set(value.data());
      } catch (const ConfigError& e) {
        throw ConfigError("config: [" + section + "] " + key + ": " + e.what());
      }
    }
  }
  cfg.validate();
}

std::string dump_config(const RunConfig& cfg) {
  RunConfig copy = cfg;
  Schema s = schema(copy);
  std::ostringstream os;
  for (const auto& [section, fields] : s) {
    os << '[' << section << "]\n";
    for (const auto& [key, field] : fields) os << key << " = " << field.get() << '\n';
    os << '\n';
  }
  return os.str();
}

}  // namespace topseg
