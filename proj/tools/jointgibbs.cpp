// jointgibbs command-line interface.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "jointgibbs/config.hpp"
#include "jointgibbs/dataset.hpp"
#include "jointgibbs/diagnostics.hpp"
#include "jointgibbs/error.hpp"
#include "jointgibbs/postprocess.hpp"
#include "jointgibbs/sampler.hpp"

namespace fs = std::filesystem;
using namespace jointgibbs;

namespace {

struct SubsetFlags {
  std::optional<long> start, end;
  long thin = 1;
  std::string exclude;
  std::string subset;

  void add_to(CLI::App* app) {
    app->add_option("--start", start, "first iteration to use");
    app->add_option("--end", end, "last iteration to use");
    app->add_option("--thin", thin, "keep every thin-th stored iteration")->check(CLI::PositiveNumber);
    app->add_option("--exclude-chains", exclude, "comma-separated chain numbers to drop");
    app->add_option("--subset", subset,
                    "comma-separated monitor keywords (key or key=false) and node names; default analysis_main");
  }

  SubsetSpec spec(bool default_selection = true) const {
    SubsetSpec s;
    s.start = start;
    s.end = end;
    s.thin = thin;
    std::stringstream ex(exclude);
    for (std::string tok; std::getline(ex, tok, ',');) {
      if (tok.empty()) continue;
      try {
        std::size_t pos = 0;
        long c = std::stol(tok, &pos);
        if (pos != tok.size() || c < 1) throw std::invalid_argument(tok);
        s.exclude_chains.push_back(static_cast<std::size_t>(c));
      } catch (const std::exception&) {
        throw ConfigError("malformed chain number '" + tok + "' in --exclude-chains");
      }
    }
    if (!subset.empty()) {
      MonitorSpec m;
      std::stringstream ss(subset);
      const auto& groups = monitor_groups();
      const auto& leaves = monitor_leaves();
      for (std::string tok; std::getline(ss, tok, ',');) {
        if (tok.empty()) continue;
        std::string key = tok;
        bool on = true;
        if (auto eq = tok.find('='); eq != std::string::npos) {
          key = tok.substr(0, eq);
          std::string val = tok.substr(eq + 1);
          if (val == "true" || val == "TRUE" || val == "1")
            on = true;
          else if (val == "false" || val == "FALSE" || val == "0")
            on = false;
          else
            throw ConfigError("malformed --subset entry '" + tok + "'");
        }
        bool keyword = groups.count(key) || std::find(leaves.begin(), leaves.end(), key) != leaves.end();
        if (keyword)
          m.switches[key] = on;
        else if (on)
          m.other.push_back(key);
        else
          throw ConfigError("malformed --subset entry '" + tok + "'");
      }
      if (!m.switches.count("analysis_main")) m.switches["analysis_main"] = false;
      s.selection = m;
    } else if (default_selection) {
      s.selection = MonitorSpec{};
    }
    return s;
  }
};

std::pair<double, double> parse_quantiles(const std::string& q) {
  auto comma = q.find(',');
  if (comma == std::string::npos) throw ConfigError("--quantiles needs two comma-separated values");
  try {
    return {std::stod(q.substr(0, comma)), std::stod(q.substr(comma + 1))};
  } catch (const std::exception&) {
    throw ConfigError("malformed --quantiles '" + q + "'");
  }
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write '" + path + "'");
  out << text;
}

void write_manifest(const std::string& dir, const std::string& command, const nlohmann::json& args,
                    std::uint64_t seed) {
  nlohmann::json m = {{"version", kVersion}, {"command", command}, {"arguments", args}, {"seed", seed}};
  m["config_hash"] = fnv1a_hex(args.dump());
  write_text(dir + "/manifest_" + command + ".json", m.dump(2) + "\n");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bayesian joint-model imputation and analysis by Gibbs sampling"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);

  // fit
  auto* fit = app.add_subcommand("fit", "build the model graph and run the sampler");
  std::string fit_config, fit_data, fit_out;
  std::optional<long> n_iter, n_adapt, thin;
  std::optional<std::size_t> n_chains, threads;
  std::optional<std::uint64_t> seed;
  fit->add_option("--config,-c", fit_config, "JSON configuration")->required()->check(CLI::ExistingFile);
  fit->add_option("--data", fit_data, "CSV data (overrides the config)");
  fit->add_option("--out,-o", fit_out, "run directory (overrides the config)");
  fit->add_option("--n-iter", n_iter);
  fit->add_option("--n-adapt", n_adapt);
  fit->add_option("--n-chains", n_chains);
  fit->add_option("--thin", thin);
  fit->add_option("--seed", seed);
  fit->add_option("--threads", threads, "chains run in parallel (capped by JOINTGIBBS_THREADS)");

  // summary
  auto* summary = app.add_subcommand("summary", "posterior summary of a run");
  std::string run_dir, quantiles = "0.025,0.975", out_path;
  bool missinfo = false, autoburnin = false;
  SubsetFlags sum_flags;
  summary->add_option("--run,-r", run_dir)->required();
  summary->add_option("--quantiles", quantiles, "lower,upper");
  summary->add_flag("--missinfo", missinfo, "add missing-value information");
  summary->add_flag("--autoburnin", autoburnin, "drop the first half of each chain for the Gelman-Rubin criterion");
  summary->add_option("--output,-o", out_path, "JSON output (default <run>/summary.json)");
  sum_flags.add_to(summary);

  // diagnose
  auto* diagnose = app.add_subcommand("diagnose", "Gelman-Rubin, Monte Carlo error and plot data");
  std::string diag_run, diag_out, plots = "trace,density,mcse_ratio";
  SubsetFlags diag_flags;
  diagnose->add_option("--run,-r", diag_run)->required();
  diagnose->add_option("--output,-o", diag_out, "output directory (default <run>/diagnostics)");
  diagnose->add_option("--plots", plots, "comma-separated: trace, density, mcse_ratio, imp_distr");
  diag_flags.add_to(diagnose);

  // predict
  auto* pred = app.add_subcommand("predict", "posterior predictions of the analysis model");
  std::string pred_run, newdata, vars, type = "link", response, pred_out, pred_q = "0.025,0.975";
  std::size_t grid_length = 100;
  std::vector<std::string> sets;
  SubsetFlags pred_flags;
  pred->add_option("--run,-r", pred_run)->required();
  pred->add_option("--newdata", newdata, "CSV with the predictor values");
  pred->add_option("--vars", vars, "one-sided formula for a prediction grid, e.g. '~ age'");
  pred->add_option("--grid-length", grid_length)->check(CLI::PositiveNumber);
  pred->add_option("--set", sets, "pin a variable in the grid: NAME=v1,v2");
  pred->add_option("--type", type, "link, lp, response, prob or class");
  pred->add_option("--response", response, "analysis model (default: the first)");
  pred->add_option("--quantiles", pred_q, "lower,upper");
  pred->add_option("--output,-o", pred_out, "CSV output (default <run>/predict.csv)");
  pred_flags.add_to(pred);

  // impute-export
  auto* imp = app.add_subcommand("impute-export", "multiply imputed datasets from a run");
  std::string imp_run, imp_out;
  std::size_t m = 10;
  std::optional<long> imp_start;
  long minspace = 50;
  std::uint64_t imp_seed = 1;
  bool no_include = false;
  imp->add_option("--run,-r", imp_run)->required();
  imp->add_option("--m", m, "number of imputed datasets");
  imp->add_option("--start", imp_start, "first eligible iteration");
  imp->add_option("--minspace", minspace, "minimum distance between chosen iterations");
  imp->add_option("--seed", imp_seed);
  imp->add_flag("--no-include", no_include, "leave out the original data");
  imp->add_option("--output,-o", imp_out, "CSV output (default <run>/imputed.csv)");

  // md-pattern
  auto* mdp = app.add_subcommand("md-pattern", "missing-data pattern of a CSV file");
  std::string md_data, md_na = "NA", md_config, md_out;
  mdp->add_option("--data", md_data, "CSV data");
  mdp->add_option("--na", md_na, "missing-value token");
  mdp->add_option("--config,-c", md_config, "take the data file from a configuration");
  mdp->add_option("--output,-o", md_out, "CSV output (default: stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*fit) {
      RunConfig cfg = load_config(fit_config);
      if (!fit_data.empty()) cfg.data_path = fit_data;
      if (!fit_out.empty()) cfg.output_dir = fit_out;
      if (n_iter) cfg.mcmc.n_iter = *n_iter;
      if (n_adapt) cfg.mcmc.n_adapt = *n_adapt;
      if (n_chains) cfg.mcmc.n_chains = *n_chains;
      if (thin) cfg.mcmc.thin = *thin;
      if (seed) cfg.mcmc.seed = *seed;
      if (threads) cfg.mcmc.threads = *threads;
      cfg.mcmc.threads = effective_threads(cfg.mcmc.threads);
      if (cfg.output_dir.empty()) throw ConfigError("no output directory (set 'output' or --out)");
      cfg.mcmc.validate();
      ModelGraph g = build_graph(cfg);
      McmcSamples s = run_mcmc(g, cfg.mcmc);
      write_run(cfg.output_dir, cfg, g, s);
      for (const auto& w : s.warnings) std::cerr << "warning: " << w << "\n";
      std::cout << describe_models(g) << "\nwrote " << s.n_chains() << " chains x " << s.n_stored()
                << " iterations to " << cfg.output_dir << "\n";
      return 0;
    }
    if (*summary) {
      RunDirectory rd = read_run(run_dir);
      ModelGraph g = build_graph(rd.config);
      auto [lo, hi] = parse_quantiles(quantiles);
      PosteriorSummary ps = summarize(rd.samples, sum_flags.spec(), lo, hi, &g, autoburnin);
      std::string text = summary_text(ps, missinfo);
      std::cout << text;
      write_text(run_dir + "/summary.txt", text);
      write_text(out_path.empty() ? run_dir + "/summary.json" : out_path, summary_json(ps));
      return 0;
    }
    if (*diagnose) {
      RunDirectory rd = read_run(diag_run);
      ModelGraph g = build_graph(rd.config);
      std::string dir = diag_out.empty() ? diag_run + "/diagnostics" : diag_out;
      fs::create_directories(dir);
      SubsetSpec spec = diag_flags.spec();
      Subset sub = resolve_subset(rd.samples, spec);
      std::ostringstream gr;
      gr << "node,gr_point,gr_upper,mcse,sd,mcse_sd_ratio\n";
      std::cout << "node  GR(point)  GR(upper)  MCSE  MCSE/SD\n";
      for (std::size_t j : sub.nodes) {
        auto draws = chain_draws(rd.samples, sub, j);
        std::string p = "NA", u = "NA", e = "NA", sd = "NA", r = "NA";
        if (draws.size() >= 2) {
          try {
            auto res = gelman_rubin(draws);
            p = format_double(res.point);
            u = format_double(res.upper);
          } catch (const DataError&) {
          }
        }
        try {
          auto me = mc_error(draws);
          e = format_double(me.mcse);
          sd = format_double(me.sd);
          if (std::isfinite(me.ratio)) r = format_double(me.ratio);
        } catch (const DataError&) {
        }
        const std::string& name = rd.samples.nodes[j].name;
        gr << csv_escape(name) << ',' << p << ',' << u << ',' << e << ',' << sd << ',' << r << '\n';
        std::cout << name << "  " << p << "  " << u << "  " << e << "  " << r << "\n";
      }
      write_text(dir + "/diagnostics.csv", gr.str());
      std::stringstream ks(plots);
      for (std::string k; std::getline(ks, k, ',');) {
        if (k.empty()) continue;
        PlotData pd = plot_data(rd.samples, g, parse_plot_kind(k), spec);
        write_dataset(dir + "/" + k + ".csv", pd.table);
        write_text(dir + "/" + k + ".json", pd.sidecar + "\n");
      }
      return 0;
    }
    if (*pred) {
      RunDirectory rd = read_run(pred_run);
      ModelGraph g = build_graph(rd.config);
      if (newdata.empty() == vars.empty()) throw ConfigError("give exactly one of --newdata and --vars");
      Dataset nd;
      if (!newdata.empty()) {
        nd = read_csv(newdata, rd.config.na);
      } else {
        std::map<std::string, std::vector<std::string>> overrides;
        for (const auto& s : sets) {
          auto eq = s.find('=');
          if (eq == std::string::npos || eq == 0) throw ConfigError("malformed --set '" + s + "' (expected NAME=v1,v2)");
          std::stringstream vs(s.substr(eq + 1));
          for (std::string v; std::getline(vs, v, ',');) overrides[s.substr(0, eq)].push_back(v);
        }
        nd = pred_df(g, vars, grid_length, overrides);
      }
      auto [lo, hi] = parse_quantiles(pred_q);
      PredictionResult res = predict(rd.samples, g, nd, parse_predict_type(type), lo, hi, pred_flags.spec(false), response);
      std::string path = pred_out.empty() ? pred_run + "/predict.csv" : pred_out;
      write_dataset(path, prediction_table(res));
      std::cout << "wrote " << res.values.rows() << " predictions to " << path << "\n";
      return 0;
    }
    if (*imp) {
      RunDirectory rd = read_run(imp_run);
      ModelGraph g = build_graph(rd.config);
      ImputedStack st = get_mi_dat(rd.samples, g, m, !no_include, imp_start, minspace, imp_seed);
      std::string path = imp_out.empty() ? imp_run + "/imputed.csv" : imp_out;
      write_dataset(path, st.data);
      nlohmann::json picks = nlohmann::json::array();
      for (std::size_t k = 0; k < st.picks.size(); ++k)
        picks.push_back({{"imputation", k + 1}, {"chain", st.picks[k].chain + 1}, {"iteration", st.picks[k].iteration}});
      nlohmann::json side = {{"m", m}, {"seed", imp_seed}, {"minspace", minspace}, {"picks", picks}};
      write_text(path + ".json", side.dump(2) + "\n");
      write_manifest(fs::path(path).parent_path().empty() ? "." : fs::path(path).parent_path().string(), "impute-export",
                     {{"run", imp_run}, {"m", m}, {"seed", imp_seed}, {"minspace", minspace},
                      {"include", !no_include}, {"start", imp_start ? nlohmann::json(*imp_start) : nlohmann::json()}},
                     imp_seed);
      std::cout << "wrote " << st.picks.size() << " imputed datasets to " << path << "\n";
      return 0;
    }
    if (*mdp) {
      std::string data = md_data, na = md_na;
      if (!md_config.empty()) {
        RunConfig cfg = load_config(md_config);
        if (data.empty()) data = cfg.data_path;
        if (!mdp->count("--na")) na = cfg.na;
      }
      if (data.empty()) throw ConfigError("give --data or --config");
      if (!fs::exists(data)) throw ConfigError("data file '" + data + "' does not exist");
      MdPattern p = md_pattern(read_csv(data, na));
      if (md_out.empty())
        std::cout << md_pattern_csv(p);
      else
        write_md_pattern_csv(p, md_out);
      return 0;
    }
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 3;
  } catch (const SamplerError& e) {
    std::cerr << "sampler error: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
