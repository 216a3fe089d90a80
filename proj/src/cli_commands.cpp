#include "quad/cli_commands.hpp"

#include <algorithm>
#include <set>

#include "quad/rng.hpp"
#include "quad/sim.hpp"

namespace quad {

using nlohmann::json;

namespace {

int run_guarded(std::ostream& err, const std::function<int()>& body) {
  try {
    return body();
  } catch (const NumericalError& e) {
    err << "numerical error: " << e.what() << "\n";
    return 2;
  } catch (const InputError& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
}

Dataset ingest_validated(const std::filesystem::path& path,
                         const IngestOptions& opts, std::ostream& out,
                         std::ostream& err) {
  IngestResult res = ingest(path, opts);
  const auto& st = res.stats;
  out << "ingested " << path.string() << ": " << st.rows_kept << " rows / "
      << st.sources_kept << " sources kept (read " << st.rows_read
      << ", dropped " << st.dropped_short_side << " short-side, "
      << st.dropped_duplicate_checksum << " duplicate-checksum, "
      << st.dropped_rows_small_sources << " in " << st.dropped_small_sources
      << " small sources)\n";
  const auto violations = validate_dataset(res.dataset);
  if (!violations.empty()) {
    for (const auto& v : violations) err << "invalid dataset: " << v << "\n";
    throw InputError(path.string() + ": " + std::to_string(violations.size()) +
                     " invariant violation(s)");
  }
  return std::move(res.dataset);
}

std::string labeled_source_id(Label label, int index) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%s_%04d", to_string(label), index);
  return std::string(buf);
}

}  // namespace

int cmd_simulate(const SimulateArgs& args, std::ostream& out, std::ostream& err) {
  return run_guarded(err, [&] {
    SimConfig cfg = args.config;
    if (args.config_path) {
      json doc;
      try {
        doc = json::parse(read_text_file(*args.config_path));
      } catch (const json::exception& e) {
        throw InputError("config JSON parse error: " + std::string(e.what()));
      }
      cfg = sim_config_from_json(doc, cfg);
    }
    if (cfg.sources_real < 0 || cfg.sources_fake < 0 ||
        cfg.sources_real + cfg.sources_fake == 0)
      throw InputError("simulate: need a positive number of sources");

    const std::string digest = config_digest(sim_config_to_json(cfg));

    Dataset ds;
    long instances = 0;
    auto simulate_source = [&](Label label, int index) {
      const std::string sid = labeled_source_id(label, index);
      const DegradationTree tree =
          generate_tree(sid, label, derive_stream(cfg.seed, "tree/" + sid), cfg.tree);
      Rng obs_rng(derive_stream(cfg.seed, "obs/" + sid));
      QuerySet set;
      set.source_id = sid;
      set.label = label;
      set.instances = simulate_observations(tree, label, cfg.observation, obs_rng);
      instances += static_cast<long>(set.instances.size());
      ds.sets.push_back(std::move(set));
      if (args.manifest_dir) {
        write_text_file(*args.manifest_dir / (sid + ".json"),
                        tree_to_json(tree).dump(2) + "\n");
      }
    };
    for (int i = 0; i < cfg.sources_real; ++i) simulate_source(Label::Real, i);
    for (int i = 0; i < cfg.sources_fake; ++i) simulate_source(Label::Fake, i);

    write_dataset(ds, args.out_dataset);
    out << "simulated " << ds.sets.size() << " sources, " << instances
        << " instances -> " << args.out_dataset.string() << "\n";
    if (args.manifest_dir)
      out << "manifests -> " << args.manifest_dir->string() << "\n";
    out << "config_digest " << digest << "\n";
    return 0;
  });
}

int cmd_fit(const FitArgs& args, std::ostream& out, std::ostream& err) {
  return run_guarded(err, [&] {
    const Dataset ds = ingest_validated(args.dataset, args.ingest, out, err);

    Dataset dev;
    if (args.no_split) {
      dev = ds;
    } else {
      dev = split_sources(ds, args.split_fraction, args.seed).dev;
    }

    FitConfig fc;
    fc.model_order = args.model_order;
    const CalibrationModel model = fit(dev, fc);
    write_model(model, args.out_model);

    const auto& m = model.fit_meta;
    out << "fitted on " << m.dev_sources.size() << " dev sources ("
        << m.n_dev_real << " real / " << m.n_dev_fake << " fake instances)\n";
    out << "real: nll " << format_double(m.nll_final_real) << " after "
        << m.iterations_real << " iterations (init " << format_double(m.nll_init_real)
        << ")\n";
    out << "fake: nll " << format_double(m.nll_final_fake) << " after "
        << m.iterations_fake << " iterations (init " << format_double(m.nll_init_fake)
        << ")\n";
    out << "model -> " << args.out_model.string() << "\n";
    return 0;
  });
}

int cmd_score(const ScoreArgs& args, std::ostream& out, std::ostream& err) {
  return run_guarded(err, [&] {
    const Dataset ds = ingest_validated(args.dataset, args.ingest, out, err);
    const CalibrationModel model = read_model(args.model);

    struct Row {
      std::string source_id;
      FusedScore fused;
      std::size_t n;
    };
    std::vector<Row> rows;
    rows.reserve(ds.sets.size());
    for (const auto& set : ds.sets)
      rows.push_back({set.source_id, fuse_corrected(set, model), set.instances.size()});

    if (args.out.extension() == ".json") {
      json arr = json::array();
      for (const auto& r : rows)
        arr.push_back(json{{"source_id", r.source_id},
                           {"score", r.fused.score},
                           {"decision", static_cast<int>(r.fused.decision)},
                           {"n_instances", r.n}});
      write_text_file(args.out,
                      json{{"schema_version", "1"}, {"scores", std::move(arr)}}.dump(2) + "\n");
    } else {
      std::string csv = "source_id,score,decision,n_instances\n";
      for (const auto& r : rows) {
        csv += r.source_id + "," + format_double(r.fused.score) + "," +
               std::to_string(static_cast<int>(r.fused.decision)) + "," +
               std::to_string(r.n) + "\n";
      }
      write_text_file(args.out, csv);
    }
    out << "scored " << rows.size() << " sources -> " << args.out.string() << "\n";
    return 0;
  });
}

int cmd_evaluate(const EvaluateArgs& args, std::ostream& out, std::ostream& err) {
  return run_guarded(err, [&] {
    if (args.datasets.empty()) throw InputError("evaluate: no dataset given");
    if (args.models.size() > 1 && args.models.size() != args.datasets.size())
      throw InputError("evaluate: give one model, or one per dataset");

    json digest_doc{{"datasets", args.datasets},
                    {"seed", args.seed},
                    {"ks", args.ks},
                    {"random_repeats", args.random_repeats},
                    {"loo", args.loo},
                    {"exclude_dev", args.exclude_dev}};
    const std::string digest = config_digest(digest_doc);

    std::vector<std::pair<std::string, EvalReport>> reports;
    for (std::size_t i = 0; i < args.datasets.size(); ++i) {
      std::string name = args.datasets[i];
      std::filesystem::path path;
      if (const auto eq = name.find('='); eq != std::string::npos) {
        path = name.substr(eq + 1);
        name = name.substr(0, eq);
      } else {
        path = name;
        name = path.stem().string();
      }

      Dataset ds = ingest_validated(path, args.ingest, out, err);

      std::optional<CalibrationModel> model;
      if (!args.models.empty())
        model = read_model(args.models.size() == 1 ? args.models[0] : args.models[i]);

      if (args.exclude_dev && model) {
        const std::set<std::string> dev(model->fit_meta.dev_sources.begin(),
                                        model->fit_meta.dev_sources.end());
        Dataset held;
        held.schema_version = ds.schema_version;
        for (auto& set : ds.sets)
          if (!dev.contains(set.source_id)) held.sets.push_back(std::move(set));
        if (held.sets.empty())
          throw InputError("evaluate: every source belongs to the model's dev split");
        ds = std::move(held);
      }

      ProtocolOptions popts;
      popts.ks = args.ks;
      popts.random_repeats = args.random_repeats;
      popts.seed = args.seed;
      popts.loo = args.loo;
      popts.fit_config.model_order = args.model_order;
      EvalReport report =
          run_standard_evaluation(ds, model ? &*model : nullptr, popts);
      report.config_digest = digest;
      reports.emplace_back(std::move(name), std::move(report));
    }

    const std::string table = render_report_table(reports);
    out << table;
    out << "config_digest " << digest << "\n";

    if (args.out_json) {
      json doc;
      if (reports.size() == 1) {
        doc = report_to_json(reports[0].second);
      } else {
        json arr = json::array();
        for (const auto& [name, report] : reports) {
          json r = report_to_json(report);
          r["name"] = name;
          arr.push_back(std::move(r));
        }
        doc = json{{"schema_version", "1"},
                   {"config_digest", digest},
                   {"reports", std::move(arr)}};
      }
      write_text_file(*args.out_json, doc.dump(2) + "\n");
      out << "report -> " << args.out_json->string() << "\n";
    }
    if (args.out_table) {
      write_text_file(*args.out_table, table);
      out << "table -> " << args.out_table->string() << "\n";
    }
    return 0;
  });
}

int cmd_sweep(const SweepArgs& args, std::ostream& out, std::ostream& err) {
  return run_guarded(err, [&] {
    const Dataset ds = ingest_validated(args.dataset, args.ingest, out, err);
    const CalibrationModel model = read_model(args.model);

    SweepOptions opts;
    opts.grid = args.grid;
    opts.seed = args.seed;
    opts.repeats = args.repeats;
    const auto rows = run_availability_sweep(ds, model, opts);

    const std::string digest = config_digest(
        json{{"dataset", args.dataset.string()}, {"grid", args.grid},
             {"seed", args.seed}, {"repeats", args.repeats}});

    out << "n_available  method      bacc    nll\n";
    for (const auto& r : rows) {
      char line[96];
      std::snprintf(line, sizeof(line), "%-12d %-11s %6.4f  %.4f\n", r.n_available,
                    r.method.c_str(), r.bacc, r.nll);
      out << line;
    }
    out << "config_digest " << digest << "\n";

    if (args.out_json) {
      json arr = json::array();
      for (const auto& r : rows)
        arr.push_back(json{{"n", r.n_available},
                           {"method", r.method},
                           {"bacc", r.bacc},
                           {"nll", r.nll}});
      write_text_file(*args.out_json,
                      json{{"schema_version", "1"},
                           {"config_digest", digest},
                           {"rows", std::move(arr)}}.dump(2) + "\n");
      out << "sweep -> " << args.out_json->string() << "\n";
    }
    return 0;
  });
}

int cmd_validate(const ValidateArgs& args, std::ostream& out, std::ostream& err) {
  return run_guarded(err, [&] {
    // Validate the file as-is: no filters.
    IngestOptions opts;
    opts.min_short_side = 0;
    opts.min_instances_per_source = 1;
    opts.drop_duplicate_checksums = false;
    const IngestResult res = ingest(args.dataset, opts);
    const auto violations = validate_dataset(res.dataset, args.max_tree_level);
    if (violations.empty()) {
      out << "OK: " << res.stats.rows_read << " rows, " << res.dataset.sets.size()
          << " sources, no violations\n";
      return 0;
    }
    for (const auto& v : violations) err << "violation: " << v << "\n";
    err << violations.size() << " violation(s)\n";
    return 1;
  });
}

}  // namespace quad
