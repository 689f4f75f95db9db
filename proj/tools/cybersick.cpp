// Command-line front end: data synthesis, training, evaluation, simulation and
// the telemetry sidecar.

#include <csignal>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>

#include <CLI11.hpp>

#include "cybersick/csv.hpp"
#include "cybersick/dataset.hpp"
#include "cybersick/error.hpp"
#include "cybersick/forest.hpp"
#include "cybersick/keyvalue.hpp"
#include "cybersick/service.hpp"
#include "cybersick/simulator.hpp"
#include "cybersick/vrsq.hpp"

namespace fs = std::filesystem;
using namespace cybersick;

namespace {

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open '" + path + "'");
  return in;
}

std::ofstream open_out(const std::string& path) {
  if (const auto parent = fs::path(path).parent_path(); !parent.empty()) {
    fs::create_directories(parent);
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path + "'");
  return out;
}

void write_text(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  auto out = open_out(path);
  out << text;
}

SynthConfig synth_config_from(const KeyValueConfig& kv) {
  SynthConfig c;
  c.participants = static_cast<std::size_t>(kv.get_int("participants", static_cast<long long>(c.participants)));
  c.duration = kv.get_double("duration", c.duration);
  c.rate = kv.get_double("rate", c.rate);
  c.intensity_min = kv.get_double("intensity_min", c.intensity_min);
  c.intensity_max = kv.get_double("intensity_max", c.intensity_max);
  c.max_angular = kv.get_double("max_angular", c.max_angular);
  c.max_positional = kv.get_double("max_positional", c.max_positional);
  c.frequency_min = kv.get_double("frequency_min", c.frequency_min);
  c.frequency_max = kv.get_double("frequency_max", c.frequency_max);
  c.motion_noise = kv.get_double("motion_noise", c.motion_noise);
  c.logit_gain = kv.get_double("logit_gain", c.logit_gain);
  c.logit_offset = kv.get_double("logit_offset", c.logit_offset);
  c.label_noise = kv.get_double("label_noise", c.label_noise);
  kv.reject_unused();
  c.validate();
  return c;
}

void print_warnings(const std::vector<std::string>& warnings) {
  for (const auto& w : warnings) std::cerr << "warning: " << w << '\n';
}

/// Loads a labelled dataset from either a dataset CSV or captures + scores.
Dataset load_labelled(const std::string& data, const std::string& head, const std::string& scores,
                      const std::string& vrsq) {
  if (!data.empty()) {
    auto in = open_in(data);
    return read_dataset_csv(in);
  }
  if (head.empty() || (scores.empty() == vrsq.empty())) {
    throw ParameterError("give --data, or --head with exactly one of --scores / --vrsq");
  }
  auto head_in = open_in(head);
  const CaptureSet captures = read_head_csv(head_in);
  std::map<std::string, double> totals;
  if (!scores.empty()) {
    auto in = open_in(scores);
    totals = read_score_csv(in);
  } else {
    auto in = open_in(vrsq);
    for (const auto& [id, resp] : read_vrsq_csv(in)) totals[id] = score(resp).total;
  }
  AlignResult aligned = align(captures, totals);
  print_warnings(aligned.warnings);
  return std::move(aligned.windows);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Cybersickness prediction and adaptive comfort control"};
  app.require_subcommand(1);

  // gen-data
  auto* gen = app.add_subcommand("gen-data", "Synthesize captures, scores and a labelled dataset");
  std::uint64_t gen_seed = 1;
  std::string gen_out;
  std::string gen_config;
  gen->add_option("--seed", gen_seed, "Random seed");
  gen->add_option("--out", gen_out, "Output directory")->required();
  gen->add_option("--config", gen_config, "Synthesis config (key = value)");

  // train
  auto* tr = app.add_subcommand("train", "Train a random-forest model and report held-out metrics");
  std::string tr_data, tr_head, tr_scores, tr_vrsq, tr_out, tr_test_out, tr_split = "grouped";
  std::uint64_t tr_seed = 1;
  double tr_fraction = 0.2;
  bool tr_grid = false;
  std::size_t tr_folds = 5;
  HyperParams hp;
  tr->add_option("--data", tr_data, "Labelled dataset CSV");
  tr->add_option("--head", tr_head, "Head capture CSV (with --scores or --vrsq)");
  tr->add_option("--scores", tr_scores, "participant_id,vrsq_total CSV");
  tr->add_option("--vrsq", tr_vrsq, "VRSQ item responses CSV");
  tr->add_option("--out", tr_out, "Model file to write (.cfmodel)")->required();
  tr->add_option("--seed", tr_seed, "Random seed");
  tr->add_option("--split", tr_split, "Held-out split: grouped (by participant) or window")
      ->check(CLI::IsMember({"grouped", "window"}));
  tr->add_option("--test-fraction", tr_fraction, "Held-out fraction");
  tr->add_option("--test-out", tr_test_out, "Write the held-out rows as a dataset CSV");
  tr->add_flag("--grid", tr_grid, "Tune with k-fold grid search over the default grid");
  tr->add_option("--folds", tr_folds, "Folds for --grid");
  tr->add_option("--trees", hp.n_trees, "Number of trees");
  tr->add_option("--max-depth", hp.max_depth, "Maximum tree depth");
  tr->add_option("--min-leaf", hp.min_samples_leaf, "Minimum samples per leaf");
  tr->add_option("--mtry", hp.m_try, "Features considered per split");

  // eval
  auto* ev = app.add_subcommand("eval", "Evaluate a model on a labelled dataset");
  std::string ev_model, ev_data, ev_out;
  ev->add_option("--model", ev_model, "Model file")->required();
  ev->add_option("--data", ev_data, "Labelled dataset CSV")->required();
  ev->add_option("--out", ev_out, "Write the report here instead of stdout");

  // predict
  auto* pr = app.add_subcommand("predict", "Score feature rows or head captures");
  std::string pr_model, pr_data, pr_head, pr_out;
  pr->add_option("--model", pr_model, "Model file")->required();
  pr->add_option("--data", pr_data, "Dataset CSV (target column ignored)");
  pr->add_option("--head", pr_head, "Head capture CSV, windowed with the default 3 s / 1 s");
  pr->add_option("--out", pr_out, "Scores CSV (stdout when omitted)");

  // score-vrsq
  auto* sv = app.add_subcommand("score-vrsq", "Score VRSQ responses");
  std::string sv_in, sv_out;
  sv->add_option("--vrsq", sv_in, "VRSQ responses CSV")->required();
  sv->add_option("--out", sv_out, "Scored CSV (stdout when omitted)");

  // simulate
  auto* sim = app.add_subcommand("simulate", "Run a closed-loop session from a scenario file");
  std::string sim_scenario, sim_model, sim_out, sim_report;
  std::optional<std::uint64_t> sim_seed;
  sim->add_option("--scenario", sim_scenario, "Scenario file (key = value)")->required();
  sim->add_option("--model", sim_model, "Model file, or 'oracle' (overrides the scenario)");
  sim->add_option("--seed", sim_seed, "Seed (overrides the scenario)");
  sim->add_option("--out", sim_out, "Session log CSV")->required();
  sim->add_option("--report", sim_report, "Summary report (stdout when omitted)");

  // compare
  auto* cmp = app.add_subcommand("compare", "Compare a baseline and an adaptive session log");
  std::string cmp_base, cmp_adapt, cmp_config, cmp_out;
  cmp->add_option("baseline", cmp_base, "Baseline session CSV")->required();
  cmp->add_option("adaptive", cmp_adapt, "Adaptive session CSV")->required();
  cmp->add_option("--config", cmp_config, "Controller config for thresholds");
  cmp->add_option("--out", cmp_out, "Report file (stdout when omitted)");

  // serve
  auto* srv = app.add_subcommand("serve", "Run the telemetry sidecar");
  std::string srv_model, srv_config, srv_listen, srv_out;
  bool srv_stdio = false;
  srv->add_option("--model", srv_model, "Model file");
  srv->add_option("--config", srv_config, "Service/controller config (key = value)");
  srv->add_option("--listen", srv_listen, "host:port or port to listen on");
  srv->add_flag("--stdio", srv_stdio, "Speak the protocol on stdin/stdout");
  srv->add_option("--out", srv_out, "Session log CSV written on shutdown");

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed()) {
      SynthConfig cfg;
      if (!gen_config.empty()) cfg = synth_config_from(KeyValueConfig::load(gen_config));
      const SynthData data = synth_dataset(cfg, gen_seed);
      fs::create_directories(gen_out);
      {
        auto out = open_out((fs::path(gen_out) / "head.csv").string());
        write_head_csv(out, data.captures);
      }
      {
        auto out = open_out((fs::path(gen_out) / "scores.csv").string());
        write_score_csv(out, data.scores);
      }
      const AlignResult aligned = align(data.captures, data.scores);
      print_warnings(aligned.warnings);
      {
        auto out = open_out((fs::path(gen_out) / "dataset.csv").string());
        write_dataset_csv(out, aligned.windows);
      }
      std::cout << "participants=" << data.captures.size() << '\n'
                << "windows=" << aligned.windows.size() << '\n'
                << "feature_set=" << kFeatureSetVersion << '\n';
      return 0;
    }

    if (tr->parsed()) {
      const Dataset data = load_labelled(tr_data, tr_head, tr_scores, tr_vrsq);
      const bool grouped = tr_split == "grouped";
      const Split chosen = split(data, tr_fraction, tr_seed, grouped);
      std::ostringstream report;
      if (tr_grid) {
        const GridSearchResult g = grid_search(chosen.train, default_grid(), tr_folds, tr_seed);
        hp = g.best;
        for (std::size_t i = 0; i < g.cell_mse.size(); ++i) {
          report << "cv_cell_" << i << "=" << default_grid()[i].describe()
                 << " mse=" << csv::format_double(g.cell_mse[i]) << '\n';
        }
      }
      const ForestModel model = train(chosen.train, hp, tr_seed);
      save_model(model, tr_out);
      if (!tr_test_out.empty()) {
        auto out = open_out(tr_test_out);
        write_dataset_csv(out, chosen.test);
      }
      report << "split=" << tr_split << '\n'
             << "hyperparams=" << hp.describe() << '\n'
             << "train_rows=" << chosen.train.size() << '\n'
             << format_metrics(evaluate(model, chosen.test));
      // The other split is reported as a leakage diagnostic.
      const Split other = split(data, tr_fraction, tr_seed, !grouped);
      const ForestModel other_model = train(other.train, hp, tr_seed);
      report << format_metrics(evaluate(other_model, other.test),
                               grouped ? "window_split_" : "grouped_split_");
      std::cout << report.str();
      return 0;
    }

    if (ev->parsed()) {
      const ForestModel model = load_model(ev_model);
      auto in = open_in(ev_data);
      write_text(ev_out, format_metrics(evaluate(model, read_dataset_csv(in))));
      return 0;
    }

    if (pr->parsed()) {
      const ForestModel model = load_model(pr_model);
      if (pr_data.empty() == pr_head.empty()) {
        throw ParameterError("give exactly one of --data or --head");
      }
      Dataset rows;
      if (!pr_data.empty()) {
        auto in = open_in(pr_data);
        rows = read_dataset_csv(in);
      } else {
        auto in = open_in(pr_head);
        const CaptureSet captures = read_head_csv(in);
        std::map<std::string, double> placeholder;
        for (const auto& [id, c] : captures) placeholder[id] = 0.0;
        AlignResult aligned = align(captures, placeholder);
        print_warnings(aligned.warnings);
        rows = std::move(aligned.windows);
      }
      std::ostringstream out;
      csv::Writer w(out);
      w.row({"participant_id", "window", "score"});
      std::map<std::string, std::size_t> counters;
      for (const auto& row : rows) {
        w.row({row.participant_id, std::to_string(counters[row.participant_id]++),
               csv::format_double(predict(model, row.features))});
      }
      write_text(pr_out, out.str());
      return 0;
    }

    if (sv->parsed()) {
      auto in = open_in(sv_in);
      std::ostringstream out;
      write_scored_vrsq_csv(out, read_vrsq_csv(in));
      write_text(sv_out, out.str());
      return 0;
    }

    if (sim->parsed()) {
      Scenario sc = Scenario::from(KeyValueConfig::load(sim_scenario));
      if (!sim_model.empty()) sc.model_path = sim_model;
      if (sim_seed) sc.seed = *sim_seed;
      std::unique_ptr<ForestModel> model;
      if (sc.model_path != "oracle") {
        fs::path p = sc.model_path;
        if (sim_model.empty() && p.is_relative()) p = fs::path(sim_scenario).parent_path() / p;
        model = std::make_unique<ForestModel>(load_model(p.string()));
      }
      const SessionLog log = simulate_session(sc, model.get());
      {
        auto out = open_out(sim_out);
        write_session_csv(out, log);
      }
      write_text(sim_report, "latent_model=synthetic latent sickness\n" +
                                 format_summary(summarize(log, sc.controller)));
      return 0;
    }

    if (cmp->parsed()) {
      ControllerConfig cfg;
      if (!cmp_config.empty()) {
        const KeyValueConfig kv = KeyValueConfig::load(cmp_config);
        cfg = ControllerConfig::from(kv);
      }
      auto a = open_in(cmp_base);
      auto b = open_in(cmp_adapt);
      const SessionLog baseline = read_session_csv(a);
      const SessionLog adaptive = read_session_csv(b);
      write_text(cmp_out, format_comparison(compare_sessions(baseline, adaptive, cfg)));
      return 0;
    }

    if (srv->parsed()) {
      ServiceConfig cfg;
      if (!srv_config.empty()) cfg = ServiceConfig::from(KeyValueConfig::load(srv_config));
      if (!srv_model.empty()) cfg.model_path = srv_model;
      if (!srv_listen.empty()) cfg.listen = srv_listen;
      if (!srv_out.empty()) cfg.log_path = srv_out;
      cfg.stdio = srv_stdio;
      if (cfg.model_path.empty()) throw ParameterError("serve needs --model");
      if (cfg.stdio == !cfg.listen.empty()) {
        throw ParameterError("serve needs exactly one of --listen or --stdio");
      }
      auto model = std::make_shared<const ForestModel>(load_model(cfg.model_path));
      if (cfg.stdio) {
        std::ios::sync_with_stdio(false);
        serve_stream(model, cfg, std::cin, std::cout);
        return 0;
      }
      sigset_t signals;
      sigemptyset(&signals);
      sigaddset(&signals, SIGINT);
      sigaddset(&signals, SIGTERM);
      pthread_sigmask(SIG_BLOCK, &signals, nullptr);
      const auto [host, port] = parse_endpoint(cfg.listen);
      TcpServer server(model, cfg);
      server.start(host, port);
      std::cerr << "listening on " << host << ':' << server.port() << '\n';
      int sig = 0;
      sigwait(&signals, &sig);
      server.stop();
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
