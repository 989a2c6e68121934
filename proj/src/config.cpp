//  Copyright 2026 The despec Authors
//
//  Licensed under the Apache License, Version 2.0 (the "License");
//  you may not use this file except in compliance with the License.
//  You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
//  Unless required by applicable law or agreed to in writing, software
//  distributed under the License is distributed on an "AS IS" BASIS,
//  WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
//  See the License for the specific language governing permissions and
//  limitations under the License.

#include "despec/config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>
#include <vector>

namespace despec {

namespace {

namespace pt = boost::property_tree;

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string fmt_bool(bool b) { return b ? "true" : "false"; }

double to_double(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const double d = std::stod(v, &used);
    if (used != v.size() || !std::isfinite(d)) throw std::invalid_argument(v);
    return d;
  } catch (const std::logic_error&) {
    throw ConfigError("config key " + key + ": expected a number, got '" + v + "'");
  }
}

long long to_int(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const long long i = std::stoll(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return i;
  } catch (const std::logic_error&) {
    throw ConfigError("config key " + key + ": expected an integer, got '" + v + "'");
  }
}

std::uint64_t to_u64(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    if (!v.empty() && v[0] == '-') throw std::invalid_argument(v);
    const unsigned long long i = std::stoull(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return i;
  } catch (const std::logic_error&) {
    throw ConfigError("config key " + key + ": expected a nonnegative integer, got '" + v + "'");
  }
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ConfigError("config key " + key + ": expected true or false, got '" + v + "'");
}

template <typename F>
auto wrap_user_error(const std::string& key, F&& f) {
  try {
    return f();
  } catch (const ConfigError&) {
    throw;
  } catch (const UserError& e) {
    throw ConfigError("config key " + key + ": " + e.what());
  }
}

struct Key {
  const char* section;
  const char* name;
  std::function<std::string(const Config&)> get;
  std::function<void(Config&, const std::string& qualified, const std::string& value)> set;
};

#define DOUBLE_KEY(sec, name, field)                                                              \
  Key {                                                                                           \
    sec, name, [](const Config& c) { return fmt_double(c.field); },                               \
        [](Config& c, const std::string& k, const std::string& v) { c.field = to_double(k, v); } \
  }
#define INT_KEY(sec, name, field)                                                                              \
  Key {                                                                                                        \
    sec, name, [](const Config& c) { return std::to_string(c.field); },                                        \
        [](Config& c, const std::string& k, const std::string& v) { c.field = static_cast<int>(to_int(k, v)); } \
  }
#define U64_KEY(sec, name, field)                                                              \
  Key {                                                                                        \
    sec, name, [](const Config& c) { return std::to_string(c.field); },                        \
        [](Config& c, const std::string& k, const std::string& v) { c.field = to_u64(k, v); } \
  }
#define BOOL_KEY(sec, name, field)                                                              \
  Key {                                                                                         \
    sec, name, [](const Config& c) { return fmt_bool(c.field); },                               \
        [](Config& c, const std::string& k, const std::string& v) { c.field = to_bool(k, v); } \
  }
#define STRING_KEY(sec, name, field)                                                                       \
  Key {                                                                                                    \
    sec, name, [](const Config& c) { return c.field; }, [](Config& c, const std::string&, const std::string& v) { \
      c.field = v;                                                                                         \
    }                                                                                                      \
  }

const std::vector<Key>& keys() {
  static const std::vector<Key> table = {
      INT_KEY("synth", "groups", synth.groups),
      INT_KEY("synth", "width", synth.width),
      INT_KEY("synth", "height", synth.height),
      DOUBLE_KEY("synth", "split_fraction", synth.split_fraction),
      U64_KEY("synth", "seed", synth.seed),
      INT_KEY("synth", "lights", synth.lights),
      DOUBLE_KEY("synth", "ground_plane_prob", synth.ground_plane_prob),
      DOUBLE_KEY("synth", "ks_min", synth.ks_min),
      DOUBLE_KEY("synth", "ks_max", synth.ks_max),
      DOUBLE_KEY("synth", "phong_min", synth.phong_min),
      DOUBLE_KEY("synth", "phong_max", synth.phong_max),
      DOUBLE_KEY("synth", "gamma", synth.tone.gamma),
      DOUBLE_KEY("synth", "exposure_percentile", synth.tone.percentile),
      DOUBLE_KEY("synth", "exposure_target", synth.tone.target),
      STRING_KEY("synth", "envmap", synth.envmap_path),
      STRING_KEY("synth", "mesh", synth.mesh_path),
      STRING_KEY("synth", "texture", synth.texture_path),

      Key{"tone", "intensity",
          [](const Config& c) { return std::string(c.tone.intensity == ResidueIntensity::Max ? "max" : "mean"); },
          [](Config& c, const std::string& k, const std::string& v) {
            if (v == "max") c.tone.intensity = ResidueIntensity::Max;
            else if (v == "mean") c.tone.intensity = ResidueIntensity::Mean;
            else throw ConfigError("config key " + k + ": expected max or mean, got '" + v + "'");
          }},
      DOUBLE_KEY("tone", "ridge", tone.fit.ridge),
      Key{"tone", "error_space",
          [](const Config& c) { return std::string(c.tone.fit.space == ToneErrorSpace::HSV ? "hsv" : "rgb"); },
          [](Config& c, const std::string& k, const std::string& v) {
            if (v == "hsv") c.tone.fit.space = ToneErrorSpace::HSV;
            else if (v == "rgb") c.tone.fit.space = ToneErrorSpace::RGB;
            else throw ConfigError("config key " + k + ": expected hsv or rgb, got '" + v + "'");
          }},
      BOOL_KEY("tone", "exclude_saturated", tone.fit.exclude_saturated),

      DOUBLE_KEY("train", "lambda1", train.weights.lambda1),
      DOUBLE_KEY("train", "lambda2", train.weights.lambda2),
      DOUBLE_KEY("train", "lambda3", train.weights.lambda3),
      DOUBLE_KEY("train", "lr", train.lr),
      INT_KEY("train", "lr_decay_epochs", train.lr_decay_epochs),
      INT_KEY("train", "epochs", train.epochs),
      INT_KEY("train", "batch", train.batch),
      INT_KEY("train", "max_steps", train.max_steps),
      U64_KEY("train", "seed", train.seed),
      BOOL_KEY("train", "flip", train.flip),
      BOOL_KEY("train", "highlight_edit", train.highlight_edit),
      DOUBLE_KEY("train", "alpha_min", train.alpha_min),
      DOUBLE_KEY("train", "alpha_max", train.alpha_max),
      Key{"train", "stage1_mode", [](const Config& c) { return pipeline::to_string(c.train.mode); },
          [](Config& c, const std::string& k, const std::string& v) {
            c.train.mode = wrap_user_error(k, [&] { return pipeline::parse_stage1_mode(v); });
          }},
      Key{"train", "residue_source", [](const Config& c) { return pipeline::to_string(c.train.residue); },
          [](Config& c, const std::string& k, const std::string& v) {
            c.train.residue = wrap_user_error(k, [&] { return pipeline::parse_residue_source(v); });
          }},
      Key{"train", "variant", [](const Config& c) { return pipeline::to_string(c.train.variant); },
          [](Config& c, const std::string& k, const std::string& v) {
            c.train.variant = wrap_user_error(k, [&] { return pipeline::parse_variant(v); });
          }},
      INT_KEY("train", "base_width", train.base_width),
      INT_KEY("train", "keep_every", train.keep_every),
      BOOL_KEY("train", "parallel_loading", train.parallel_loading),

      Key{"eval", "target", [](const Config& c) { return std::string(target_image_name(c.eval.target)); },
          [](Config& c, const std::string& k, const std::string& v) {
            c.eval.target = wrap_user_error(k, [&] { return parse_eval_target(v); });
          }},
      STRING_KEY("eval", "split", eval.split),
  };
  return table;
}

}  // namespace

Config parse_config(const std::string& text) {
  pt::ptree tree;
  std::istringstream in(text);
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(std::string("malformed config: ") + e.what());
  }
  const std::set<std::string> sections = {"synth", "tone", "train", "eval"};
  Config cfg;
  for (const auto& [section, body] : tree) {
    if (!sections.count(section)) {
      if (!body.data().empty()) throw ConfigError("config key '" + section + "' must be inside a section");
      throw ConfigError("unknown config section [" + section + "]");
    }
    for (const auto& [name, value] : body) {
      const std::string qualified = section + "." + name;
      const Key* match = nullptr;
      for (const auto& k : keys()) {
        if (section == k.section && name == k.name) match = &k;
      }
      if (!match) throw ConfigError("unknown config key " + qualified);
      match->set(cfg, qualified, value.data());
    }
  }
  return cfg;
}

Config load_config(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot read config " + path.string());
  std::ostringstream ss;
  ss << f.rdbuf();
  return parse_config(ss.str());
}

std::string serialize_config(const Config& config) {
  std::string out;
  std::string current;
  for (const auto& k : keys()) {
    if (current != k.section) {
      if (!current.empty()) out += "\n";
      current = k.section;
      out += "[" + current + "]\n";
    }
    out += std::string(k.name) + " = " + k.get(config) + "\n";
  }
  return out;
}

std::string fnv1a_hex(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string config_hash(const Config& config) { return fnv1a_hex(serialize_config(config)); }

}  // namespace despec
