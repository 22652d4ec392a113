#include "alo/config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <type_traits>
#include <variant>

#include "alo/error.hpp"
#include "alo/io.hpp"

namespace alo {

namespace {

using FieldPtr = std::variant<std::string RunConfig::*, double RunConfig::*, int RunConfig::*,
                              bool RunConfig::*, Index RunConfig::*, std::uint64_t RunConfig::*>;

struct Field {
  const char* key;
  FieldPtr ptr;
};

const std::vector<Field>& fields() {
  static const std::vector<Field> table = {
      {"model", &RunConfig::model},
      {"loss", &RunConfig::loss},
      {"reg", &RunConfig::reg},
      {"d_matrix", &RunConfig::d_matrix},
      {"lambda_max", &RunConfig::lambda_max},
      {"lambda_min", &RunConfig::lambda_min},
      {"lambda_ratio", &RunConfig::lambda_ratio},
      {"lambda_count", &RunConfig::lambda_count},
      {"route", &RunConfig::route},
      {"d", &RunConfig::error_fn},
      {"oracle", &RunConfig::oracle},
      {"kfold", &RunConfig::kfold},
      {"seed", &RunConfig::seed},
      {"threads", &RunConfig::threads},
      {"repeats", &RunConfig::repeats},
      {"max_refits", &RunConfig::max_refits},
      {"kkt_tol", &RunConfig::kkt_tol},
      {"zero_tol", &RunConfig::zero_tol},
      {"margin_tol", &RunConfig::margin_tol},
      {"rank_tol", &RunConfig::rank_tol},
      {"in", &RunConfig::in},
      {"y_in", &RunConfig::y_in},
      {"out", &RunConfig::out},
      {"obs_out", &RunConfig::obs_out},
      {"scenario", &RunConfig::scenario},
      {"n", &RunConfig::n},
      {"p", &RunConfig::p},
      {"p1", &RunConfig::p1},
      {"p2", &RunConfig::p2},
      {"rank", &RunConfig::rank},
      {"k", &RunConfig::k},
      {"rho", &RunConfig::rho},
      {"noise_var", &RunConfig::noise_var},
  };
  return table;
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

template <class T>
T parse_integer(std::string_view key, const std::string& v) {
  T out{};
  const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
  if (res.ec != std::errc() || res.ptr != v.data() + v.size()) {
    throw Error(ErrorKind::parse_error, "'" + std::string(key) + "': expected an integer, got '" + v + "'");
  }
  return out;
}

double parse_real(std::string_view key, const std::string& v) {
  double out = 0.0;
  const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
  if (res.ec != std::errc() || res.ptr != v.data() + v.size()) {
    throw Error(ErrorKind::parse_error, "'" + std::string(key) + "': expected a number, got '" + v + "'");
  }
  return out;
}

bool parse_bool(std::string_view key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw Error(ErrorKind::parse_error, "'" + std::string(key) + "': expected true/false, got '" + v + "'");
}

std::string normalize_key(std::string_view key) {
  std::string k = trim(key);
  for (char& c : k) {
    if (c == '-') c = '_';
  }
  return k;
}

}  // namespace

void set_field(RunConfig& cfg, std::string_view key, std::string_view value) {
  const std::string k = normalize_key(key);
  const std::string v = trim(value);
  for (const Field& f : fields()) {
    if (k != f.key) continue;
    std::visit(
        [&](auto ptr) {
          using T = std::decay_t<decltype(cfg.*ptr)>;
          if constexpr (std::is_same_v<T, std::string>) {
            cfg.*ptr = v;
          } else if constexpr (std::is_same_v<T, double>) {
            cfg.*ptr = parse_real(k, v);
          } else if constexpr (std::is_same_v<T, bool>) {
            cfg.*ptr = parse_bool(k, v);
          } else {
            cfg.*ptr = parse_integer<T>(k, v);
          }
        },
        f.ptr);
    return;
  }
  throw Error(ErrorKind::parse_error, "unknown config key '" + k + "'");
}

namespace {

void apply_text(RunConfig& cfg, const std::string& text, const std::string& source) {
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    if (trim(line).empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorKind::parse_error, source + ":" + std::to_string(lineno) + ": expected key = value");
    }
    try {
      set_field(cfg, std::string_view(line).substr(0, eq), std::string_view(line).substr(eq + 1));
    } catch (const Error& e) {
      throw Error(ErrorKind::parse_error, source + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
}

}  // namespace

RunConfig parse_config_text(const std::string& text, const std::string& source) {
  RunConfig cfg;
  apply_text(cfg, text, source);
  return cfg;
}

void load_config(RunConfig& cfg, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::io_error, "cannot open config '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  apply_text(cfg, buf.str(), path);
}

std::string dump_config(const RunConfig& cfg) {
  std::ostringstream os;
  for (const Field& f : fields()) {
    os << f.key << " = ";
    std::visit(
        [&](auto ptr) {
          using T = std::decay_t<decltype(cfg.*ptr)>;
          if constexpr (std::is_same_v<T, double>) {
            os << format_double(cfg.*ptr);
          } else if constexpr (std::is_same_v<T, bool>) {
            os << (cfg.*ptr ? "true" : "false");
          } else {
            os << cfg.*ptr;
          }
        },
        f.ptr);
    os << '\n';
  }
  return os.str();
}

std::vector<std::string> config_keys() {
  std::vector<std::string> keys;
  for (const Field& f : fields()) keys.emplace_back(f.key);
  return keys;
}

GenSpec gen_spec(const RunConfig& cfg) {
  GenSpec g;
  g.scenario = parse_scenario(cfg.scenario);
  g.n = cfg.n;
  g.p = cfg.p;
  g.p1 = cfg.p1;
  g.p2 = cfg.p2;
  g.rank = cfg.rank;
  g.k = cfg.k;
  g.rho = cfg.rho;
  g.noise_var = cfg.noise_var;
  g.seed = cfg.seed;
  g.validate();
  return g;
}

}  // namespace alo
