#include "jointgibbs/config.hpp"

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "jointgibbs/error.hpp"

namespace jointgibbs {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write '" + path + "'");
  out << text;
}

std::string resolve(const std::string& base, const std::string& p) {
  if (p.empty() || fs::path(p).is_absolute()) return p;
  return (fs::path(base) / p).lexically_normal().string();
}

const json& need_type(const json& v, json::value_t t, const std::string& key, const char* what) {
  bool ok = v.type() == t || (t == json::value_t::number_float && v.is_number()) ||
            (t == json::value_t::number_unsigned && v.is_number_integer() && v.get<long long>() >= 0);
  if (!ok) throw ConfigError("config key '" + key + "' must be " + what);
  return v;
}

std::string str(const json& v, const std::string& key) {
  return need_type(v, json::value_t::string, key, "a string").get<std::string>();
}

std::map<std::string, std::string> str_map(const json& v, const std::string& key) {
  need_type(v, json::value_t::object, key, "an object");
  std::map<std::string, std::string> out;
  for (auto it = v.begin(); it != v.end(); ++it) out[it.key()] = str(it.value(), key + "." + it.key());
  return out;
}

std::vector<std::string> str_list(const json& v, const std::string& key) {
  if (v.is_string()) return {v.get<std::string>()};
  need_type(v, json::value_t::array, key, "a list of strings");
  std::vector<std::string> out;
  for (const auto& e : v) out.push_back(str(e, key));
  return out;
}

VType parse_vtype(const std::string& s) {
  if (s == "continuous") return VType::Continuous;
  if (s == "binary") return VType::Binary;
  if (s == "unordered" || s == "nominal") return VType::Unordered;
  if (s == "ordered" || s == "ordinal") return VType::Ordered;
  throw ConfigError("unknown variable type '" + s + "' (expected continuous, binary, unordered or ordered)");
}

double bound(const json& v, const std::string& key, double dflt) {
  if (v.is_null()) return dflt;
  return need_type(v, json::value_t::number_float, key, "a number or null").get<double>();
}

InitValues parse_inits(const json& v, const std::string& key) {
  need_type(v, json::value_t::object, key, "an object");
  InitValues out;
  for (auto it = v.begin(); it != v.end(); ++it) {
    std::vector<double> vals;
    if (it.value().is_number()) {
      vals.push_back(it.value().get<double>());
    } else {
      need_type(it.value(), json::value_t::array, key + "." + it.key(), "a number or a list of numbers");
      for (const auto& e : it.value())
        vals.push_back(need_type(e, json::value_t::number_float, key + "." + it.key(), "a list of numbers").get<double>());
    }
    out[it.key()] = std::move(vals);
  }
  return out;
}

void parse_mcmc(const json& v, McmcSettings& m) {
  need_type(v, json::value_t::object, "mcmc", "an object");
  static const std::set<std::string> keys{"n_chains", "n_adapt", "n_iter", "thin", "seed", "inits", "threads"};
  for (auto it = v.begin(); it != v.end(); ++it) {
    const std::string& k = it.key();
    if (!keys.count(k)) throw ConfigError("unknown config key 'mcmc." + k + "'");
    const json& x = it.value();
    std::string key = "mcmc." + k;
    if (k == "inits") {
      m.inits.clear();
      if (x.is_array())
        for (const auto& e : x) m.inits.push_back(parse_inits(e, key));
      else if (!x.is_null())
        m.inits.push_back(parse_inits(x, key));
      continue;
    }
    if (!x.is_number_integer()) throw ConfigError("config key '" + key + "' must be an integer");
    long long n = x.get<long long>();
    if (k == "seed") {
      if (n < 0) throw ConfigError("config key 'mcmc.seed' must be non-negative");
      m.seed = static_cast<std::uint64_t>(x.is_number_unsigned() ? x.get<std::uint64_t>() : n);
      continue;
    }
    if (n < 0) throw ConfigError("config key '" + key + "' must be non-negative");
    if (k == "n_chains") m.n_chains = static_cast<std::size_t>(n);
    if (k == "n_adapt") m.n_adapt = static_cast<long>(n);
    if (k == "n_iter") m.n_iter = static_cast<long>(n);
    if (k == "thin") m.thin = static_cast<long>(n);
    if (k == "threads") m.threads = static_cast<std::size_t>(n);
  }
}

AnalysisSpec parse_analysis(const json& v, const std::string& key) {
  if (v.is_string()) return AnalysisSpec{v.get<std::string>(), std::nullopt, std::nullopt};
  need_type(v, json::value_t::object, key, "a formula string or an object");
  AnalysisSpec a;
  std::optional<std::string> family, link;
  for (auto it = v.begin(); it != v.end(); ++it) {
    const std::string k = it.key();
    if (k == "formula")
      a.formula = str(it.value(), key + ".formula");
    else if (k == "random")
      a.random = str(it.value(), key + ".random");
    else if (k == "model")
      a.model = str(it.value(), key + ".model");
    else if (k == "family")
      family = str(it.value(), key + ".family");
    else if (k == "link")
      link = str(it.value(), key + ".link");
    else
      throw ConfigError("unknown config key '" + key + "." + k + "'");
  }
  if (a.formula.empty()) throw ConfigError("config key '" + key + ".formula' is required");
  if (family || link) {
    if (a.model) throw ConfigError("give either 'model' or 'family'/'link' for " + key);
    if (!family) throw ConfigError("'link' needs 'family' in " + key);
    Family f = parse_family(*family);
    std::string l = link ? *link : "";
    if (l.empty()) {
      switch (f) {
        case Family::Binomial: l = "logit"; break;
        case Family::Poisson: l = "log"; break;
        case Family::Gamma: l = "inverse"; break;
        default: l = "identity"; break;
      }
    }
    a.model = std::string(a.random ? "glmm_" : "glm_") + family_name(f) + "_" + l;
  }
  return a;
}

}  // namespace

RunConfig parse_config(const json& j, const std::string& base_dir) {
  if (!j.is_object()) throw ConfigError("the configuration must be a JSON object");
  RunConfig cfg;
  cfg.source = j;
  cfg.options.hyper = default_hyperparameters();
  std::optional<AnalysisSpec> single;
  std::optional<std::string> top_random, top_model, top_family, top_link;
  for (auto it = j.begin(); it != j.end(); ++it) {
    const std::string& k = it.key();
    const json& v = it.value();
    if (k == "data") {
      cfg.data_path = resolve(base_dir, str(v, k));
    } else if (k == "na") {
      cfg.na = str(v, k);
    } else if (k == "formula") {
      single = AnalysisSpec{str(v, k), std::nullopt, std::nullopt};
    } else if (k == "random") {
      top_random = str(v, k);
    } else if (k == "model") {
      top_model = str(v, k);
    } else if (k == "family") {
      top_family = str(v, k);
    } else if (k == "link") {
      top_link = str(v, k);
    } else if (k == "formulas") {
      need_type(v, json::value_t::array, k, "a list");
      for (std::size_t i = 0; i < v.size(); ++i) cfg.analyses.push_back(parse_analysis(v[i], "formulas[" + std::to_string(i) + "]"));
    } else if (k == "models") {
      cfg.options.models = str_map(v, k);
    } else if (k == "no_model") {
      auto l = str_list(v, k);
      cfg.options.no_model.insert(l.begin(), l.end());
    } else if (k == "auxvars") {
      if (v.is_array()) {
        std::string f = "~";
        for (std::size_t i = 0; i < v.size(); ++i) f += (i ? " + " : " ") + str(v[i], k);
        cfg.options.auxvars = f;
      } else {
        cfg.options.auxvars = str(v, k);
      }
    } else if (k == "refcats") {
      if (v.is_string())
        cfg.global_refcat = v.get<std::string>();
      else {
        need_type(v, json::value_t::object, k, "a string or an object");
        for (auto r = v.begin(); r != v.end(); ++r)
          cfg.options.refcats[r.key()] = r.value().is_number_integer() ? std::to_string(r.value().get<long long>())
                                                                      : str(r.value(), "refcats." + r.key());
      }
    } else if (k == "coding") {
      if (v.is_string())
        cfg.global_coding = parse_coding(v.get<std::string>());
      else
        for (const auto& [n, c] : str_map(v, k)) cfg.options.coding[n] = parse_coding(c);
    } else if (k == "trunc") {
      need_type(v, json::value_t::object, k, "an object");
      for (auto t = v.begin(); t != v.end(); ++t) {
        std::string key = "trunc." + t.key();
        if (!t.value().is_array() || t.value().size() != 2)
          throw ConfigError("config key '" + key + "' must be a [lower, upper] pair");
        Truncation tr;
        tr.lower = bound(t.value()[0], key, tr.lower);
        tr.upper = bound(t.value()[1], key, tr.upper);
        cfg.options.trunc[t.key()] = tr;
      }
    } else if (k == "shrinkage") {
      if (v.is_boolean() || v.is_null()) {
        cfg.options.ridge_all = v.is_boolean() && v.get<bool>();
      } else if (v.is_string()) {
        if (v.get<std::string>() != "ridge") throw ConfigError("unknown shrinkage '" + v.get<std::string>() + "'");
        cfg.options.ridge_all = true;
      } else {
        for (const auto& [n, s] : str_map(v, k)) {
          if (s != "ridge") throw ConfigError("unknown shrinkage '" + s + "' for '" + n + "'");
          cfg.options.ridge.insert(n);
        }
      }
    } else if (k == "monitor_params") {
      need_type(v, json::value_t::object, k, "an object");
      for (auto m = v.begin(); m != v.end(); ++m) {
        if (m.key() == "other")
          cfg.options.monitor.other = str_list(m.value(), "monitor_params.other");
        else
          cfg.options.monitor.switches[m.key()] =
              need_type(m.value(), json::value_t::boolean, "monitor_params." + m.key(), "true or false").get<bool>();
      }
      validate(cfg.options.monitor);
    } else if (k == "hyperpars") {
      need_type(v, json::value_t::object, k, "an object");
      for (auto grp = v.begin(); grp != v.end(); ++grp) {
        need_type(grp.value(), json::value_t::object, "hyperpars." + grp.key(), "an object");
        for (auto f = grp.value().begin(); f != grp.value().end(); ++f)
          cfg.options.hyper.set(grp.key(), f.key(),
                                need_type(f.value(), json::value_t::number_float,
                                          "hyperpars." + grp.key() + "." + f.key(), "a number")
                                    .get<double>());
      }
    } else if (k == "scale_vars") {
      if (v.is_boolean()) {
        cfg.options.scale.mode = v.get<bool>() ? ScaleSpec::Mode::All : ScaleSpec::Mode::None;
      } else {
        cfg.options.scale.mode = ScaleSpec::Mode::List;
        auto l = str_list(v, k);
        cfg.options.scale.variables.insert(l.begin(), l.end());
      }
    } else if (k == "types") {
      need_type(v, json::value_t::object, k, "an object");
      for (auto t = v.begin(); t != v.end(); ++t) {
        std::string key = "types." + t.key();
        TypeOverride o;
        if (t.value().is_string()) {
          o.vtype = parse_vtype(t.value().get<std::string>());
        } else {
          need_type(t.value(), json::value_t::object, key, "a string or an object");
          for (auto f = t.value().begin(); f != t.value().end(); ++f) {
            if (f.key() == "type")
              o.vtype = parse_vtype(str(f.value(), key + ".type"));
            else if (f.key() == "levels")
              o.levels = str_list(f.value(), key + ".levels");
            else if (f.key() == "level")
              o.level = str(f.value(), key + ".level");
            else
              throw ConfigError("unknown config key '" + key + "." + f.key() + "'");
          }
        }
        cfg.options.types[t.key()] = o;
      }
    } else if (k == "mcmc") {
      parse_mcmc(v, cfg.mcmc);
    } else if (k == "output") {
      cfg.output_dir = resolve(base_dir, str(v, k));
    } else if (k == "threads") {
      if (!v.is_number_integer() || v.get<long long>() < 1) throw ConfigError("config key 'threads' must be a positive integer");
      cfg.mcmc.threads = static_cast<std::size_t>(v.get<long long>());
    } else {
      throw ConfigError("unknown config key '" + k + "'");
    }
  }
  if (single) {
    if (!cfg.analyses.empty()) throw ConfigError("give either 'formula' or 'formulas', not both");
    json one = {{"formula", single->formula}};
    if (top_random) one["random"] = *top_random;
    if (top_model) one["model"] = *top_model;
    if (top_family) one["family"] = *top_family;
    if (top_link) one["link"] = *top_link;
    cfg.analyses.push_back(parse_analysis(one, "config"));
  } else if (top_random || top_model || top_family || top_link) {
    throw ConfigError("'random', 'model', 'family' and 'link' at the top level need 'formula'");
  }
  if (cfg.analyses.empty()) throw ConfigError("the configuration needs 'formula' or 'formulas'");
  cfg.mcmc.validate();
  return cfg;
}

RunConfig load_config(const std::string& path) {
  json j;
  try {
    j = json::parse(read_file(path));
  } catch (const json::parse_error& e) {
    throw ConfigError("'" + path + "' is not valid JSON: " + e.what());
  }
  return parse_config(j, fs::path(path).parent_path().string().empty() ? "." : fs::path(path).parent_path().string());
}

ModelGraph build_graph(const RunConfig& cfg, const Dataset& data) {
  GraphOptions opt = cfg.options;
  if (cfg.global_refcat || cfg.global_coding) {
    Dataset typed = apply_types(data, opt.types);
    for (const auto& c : typed.columns()) {
      if (!c.categorical) continue;
      if (cfg.global_refcat && !opt.refcats.count(c.name)) opt.refcats[c.name] = *cfg.global_refcat;
      if (cfg.global_coding && !opt.coding.count(c.name)) opt.coding[c.name] = *cfg.global_coding;
    }
  }
  return build_model_graph(cfg.analyses, data, opt);
}

ModelGraph build_graph(const RunConfig& cfg) {
  if (cfg.data_path.empty()) throw ConfigError("no data file given");
  if (!fs::exists(cfg.data_path)) throw ConfigError("data file '" + cfg.data_path + "' does not exist");
  return build_graph(cfg, read_csv(cfg.data_path, cfg.na));
}

std::size_t effective_threads(std::size_t requested) {
  std::size_t n = std::max<std::size_t>(requested, 1);
  if (const char* env = std::getenv("JOINTGIBBS_THREADS")) {
    char* end = nullptr;
    long cap = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && cap >= 1) n = std::min<std::size_t>(n, static_cast<std::size_t>(cap));
  }
  return n;
}

std::string fnv1a_hex(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

namespace {

const char* kind_name(NodeKind k) {
  switch (k) {
    case NodeKind::Coef: return "coef";
    case NodeKind::Sigma: return "sigma";
    case NodeKind::Tau: return "tau";
    case NodeKind::Shape: return "shape";
    case NodeKind::Gamma: return "gamma";
    case NodeKind::Delta: return "delta";
    case NodeKind::D: return "D";
    case NodeKind::InvD: return "invD";
    case NodeKind::RinvD: return "RinvD";
    case NodeKind::Ranef: return "ranef";
    case NodeKind::Imp: return "imp";
  }
  return "?";
}

NodeKind parse_kind(const std::string& s) {
  for (NodeKind k : {NodeKind::Coef, NodeKind::Sigma, NodeKind::Tau, NodeKind::Shape, NodeKind::Gamma,
                     NodeKind::Delta, NodeKind::D, NodeKind::InvD, NodeKind::RinvD, NodeKind::Ranef, NodeKind::Imp})
    if (s == kind_name(k)) return k;
  throw DataError("unknown node kind '" + s + "' in meta.json");
}

}  // namespace

void write_run(const std::string& dir, const RunConfig& cfg, const ModelGraph& g, const McmcSamples& s) {
  fs::create_directories(dir);
  write_chain_csvs(s, dir);

  json nodes = json::array();
  for (const auto& n : s.nodes) {
    json e = {{"name", n.name}, {"tag", n.tag}, {"kind", kind_name(n.kind)}, {"model", n.model}, {"i", n.i}, {"j", n.j}};
    if (n.kind == NodeKind::Imp) {
      e["var"] = n.var;
      e["rows"] = n.rows;
    }
    nodes.push_back(std::move(e));
  }
  json scaling = json::array();
  for (const auto& m : g.models)
    for (const auto& c : m.X)
      if (c.scaled)
        scaling.push_back({{"model", m.response}, {"column", c.name}, {"center", c.center}, {"scale", c.scale}});
  json meta = {{"version", kVersion},
               {"n_chains", s.n_chains()},
               {"n_adapt", s.n_adapt},
               {"n_iter", s.n_iter},
               {"thin", s.thin},
               {"seed", s.seed},
               {"iterations", s.iterations},
               {"nodes", nodes},
               {"scaling", scaling},
               {"models", json::array()},
               {"warnings", s.warnings}};
  for (const auto& [resp, label] : g.model_labels()) meta["models"].push_back({{"response", resp}, {"type", label}});
  write_file(dir + "/meta.json", meta.dump(2) + "\n");

  json stored = cfg.source;
  if (!cfg.data_path.empty()) stored["data"] = fs::absolute(cfg.data_path).lexically_normal().string();
  stored.erase("output");
  stored["mcmc"]["n_chains"] = cfg.mcmc.n_chains;
  stored["mcmc"]["n_adapt"] = cfg.mcmc.n_adapt;
  stored["mcmc"]["n_iter"] = cfg.mcmc.n_iter;
  stored["mcmc"]["thin"] = cfg.mcmc.thin;
  stored["mcmc"]["seed"] = cfg.mcmc.seed;
  stored["mcmc"].erase("threads");
  stored.erase("threads");
  std::string canonical = stored.dump();
  write_file(dir + "/config.json", stored.dump(2) + "\n");
  write_file(dir + "/model_graph.txt", describe_models(g));
  std::string log;
  for (const auto& w : s.warnings) log += w + "\n";
  write_file(dir + "/warnings.log", log);

  std::string data_hash;
  if (!cfg.data_path.empty() && fs::exists(cfg.data_path)) data_hash = fnv1a_hex(read_file(cfg.data_path));
  json manifest = {{"version", kVersion},
                   {"config_hash", fnv1a_hex(canonical)},
                   {"data_hash", data_hash},
                   {"seed", s.seed},
                   {"n_chains", s.n_chains()},
                   {"files", json::array()}};
  for (std::size_t c = 0; c < s.n_chains(); ++c) {
    std::string name = "chain" + std::to_string(c + 1) + ".csv";
    manifest["files"].push_back({{"name", name}, {"hash", fnv1a_hex(read_file(dir + "/" + name))}});
  }
  write_file(dir + "/manifest.json", manifest.dump(2) + "\n");
}

RunDirectory read_run(const std::string& dir) {
  if (!fs::is_directory(dir)) throw ConfigError("run directory '" + dir + "' does not exist");
  for (const char* f : {"meta.json", "config.json"})
    if (!fs::exists(dir + "/" + f)) throw ConfigError("'" + dir + "' is not a run directory (no " + f + ")");
  RunDirectory rd;
  rd.config = load_config(dir + "/config.json");
  json meta;
  try {
    meta = json::parse(read_file(dir + "/meta.json"));
  } catch (const json::exception& e) {
    throw DataError("'" + dir + "/meta.json' is malformed: " + e.what());
  }
  McmcSamples& s = rd.samples;
  try {
    s.n_adapt = meta.at("n_adapt").get<long>();
    s.n_iter = meta.at("n_iter").get<long>();
    s.thin = meta.at("thin").get<long>();
    s.seed = meta.at("seed").get<std::uint64_t>();
    s.warnings = meta.at("warnings").get<std::vector<std::string>>();
    for (const auto& e : meta.at("nodes")) {
      NodeDesc d;
      d.name = e.at("name").get<std::string>();
      d.tag = e.at("tag").get<std::string>();
      d.kind = parse_kind(e.at("kind").get<std::string>());
      d.model = e.at("model").get<int>();
      d.i = e.at("i").get<int>();
      d.j = e.at("j").get<int>();
      if (e.contains("var")) d.var = e.at("var").get<std::string>();
      if (e.contains("rows")) d.rows = e.at("rows").get<std::vector<std::size_t>>();
      s.nodes.push_back(std::move(d));
    }
    std::size_t nc = meta.at("n_chains").get<std::size_t>();
    read_chain_csvs(s, dir, nc);
    if (s.n_stored() == 0) s.iterations = meta.at("iterations").get<std::vector<long>>();
  } catch (const json::exception& e) {
    throw DataError("'" + dir + "/meta.json' is malformed: " + e.what());
  }
  return rd;
}

void write_dataset(const std::string& path, const Dataset& d) {
  std::vector<std::string> header;
  for (const auto& c : d.columns()) header.push_back(c.name);
  std::vector<std::vector<std::string>> rows(d.n_rows());
  for (std::size_t r = 0; r < d.n_rows(); ++r)
    for (const auto& c : d.columns()) rows[r].push_back(c.cell_text(r));
  write_csv(path, header, rows);
}

}  // namespace jointgibbs
