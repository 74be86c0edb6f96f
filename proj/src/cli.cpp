#include "xrl/cli.hpp"

#include <cstdlib>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <optional>

#include "CLI11.hpp"
#include "toml.hpp"
#include "xrl/ape.hpp"
#include "xrl/pipeline.hpp"
#include "xrl/query.hpp"
#include "xrl/refiner.hpp"
#include "xrl/text_util.hpp"
#include "xrl/textualizer.hpp"
#include "xrl/trainer.hpp"

namespace xrl {

namespace fs = std::filesystem;

namespace {

// ------------------------------------------------------------------ config

struct FileConfig {
    std::string db;
    std::string schema;
    LlmConfig llm;
};

FileConfig load_config(const std::string& path, bool required) {
    FileConfig cfg;
    if (path.empty() || !fs::exists(path)) {
        if (required) throw Error("config file '" + path + "' not found");
    } else {
        try {
            const toml::table tbl = toml::parse_file(path);
            cfg.db = tbl["db"].value_or(std::string{});
            cfg.schema = tbl["schema"].value_or(std::string{});
            if (const auto* llm = tbl["llm"].as_table()) {
                cfg.llm.base_url = (*llm)["base_url"].value_or(std::string{});
                cfg.llm.model = (*llm)["model"].value_or(std::string{});
                cfg.llm.temperature = (*llm)["temperature"].value_or(0.5);
                cfg.llm.api_key_env = (*llm)["api_key_env"].value_or(std::string{});
                cfg.llm.timeout_seconds = (*llm)["timeout_seconds"].value_or(60);
            }
        } catch (const toml::parse_error& e) {
            throw SchemaError("config file '" + path + "': " + std::string(e.description()));
        }
    }
    if (const char* v = std::getenv("XRL_LLM_BASE_URL")) cfg.llm.base_url = v;
    if (const char* v = std::getenv("XRL_LLM_MODEL")) cfg.llm.model = v;
    if (const char* v = std::getenv("XRL_LLM_TEMPERATURE")) cfg.llm.temperature = std::stod(v);
    return cfg;
}

// ---------------------------------------------------------------- options

struct ReplayOptions {
    std::string db;
    std::string schema;
};

struct PredicateOptions {
    int n_cat = 0;
    std::string limits = "gini";
    std::string predicates;
};

struct PipelineOptions {
    double theta = 0.7;
    int k_max = 40;
    std::uint64_t seed = 0;
    std::string weights = "w2";
    std::string fallback = "approximate";
    bool drop_empty = false;

    PipelineConfig config() const {
        PipelineConfig c;
        c.theta = theta;
        c.k_max = k_max;
        c.seed = seed;
        c.weight = parse_weight_kind(weights);
        c.fallback = fallback == "abstain" ? Fallback::Abstain : Fallback::Approximate;
        c.empty = drop_empty ? EmptyCondition::Drop : EmptyCondition::Keep;
        return c;
    }
};

void add_replay_options(CLI::App* cmd, ReplayOptions& o) {
    cmd->add_option("--db", o.db, "Replay file (.db, .csv or .jsonl)");
    cmd->add_option("--schema", o.schema, "Sidecar schema.json (default: beside the replay)");
}

void add_predicate_options(CLI::App* cmd, PredicateOptions& o) {
    cmd->add_option("--ncat", o.n_cat, "Levels per predicate (default 5 with --env mountaincar, else 6)")
        ->check(CLI::Range(2, 16));
    cmd->add_option("--limits", o.limits, "Threshold source")
        ->check(CLI::IsMember({"gini", "median", "quantile"}));
    cmd->add_option("--predicates", o.predicates, "Predicate file overriding --ncat/--limits");
}

void add_pipeline_options(CLI::App* cmd, PipelineOptions& o) {
    cmd->add_option("--theta", o.theta, "Inclusion threshold")->check(CLI::Range(0.0, 1.0));
    cmd->add_option("--k-max", o.k_max, "Largest k tried by the elbow search")->check(CLI::Range(1, 1000));
    cmd->add_option("--seed", o.seed, "Clustering seed");
    cmd->add_option("--weights", o.weights, "Occurrence weight")
        ->check(CLI::IsMember({"w1", "w2", "w3", "w4"}));
    cmd->add_option("--fallback", o.fallback, "Unmatched states")
        ->check(CLI::IsMember({"approximate", "abstain"}));
    cmd->add_flag("--drop-empty", o.drop_empty, "Drop clusters whose condition is empty");
}

ReplaySet load_replay(const ReplayOptions& o, const FileConfig& cfg) {
    const std::string db = !o.db.empty() ? o.db : cfg.db;
    if (db.empty()) throw Error("no replay given (use --db or set db in explainer.toml)");
    std::optional<fs::path> sidecar;
    const std::string schema = !o.schema.empty() ? o.schema : cfg.schema;
    if (!schema.empty()) {
        sidecar = schema;
    } else if (fs::exists(default_sidecar_path(db))) {
        sidecar = default_sidecar_path(db);
    }
    return ingest(db, format_from_extension(db), sidecar);
}

int default_ncat(const PredicateOptions& o, const std::string& env) {
    if (o.n_cat > 0) return o.n_cat;
    return env == "mountaincar" || env == "MountainCar-v0" ? 5 : 6;
}

PredicateSchema load_predicates(const PredicateOptions& o, const ReplaySet& rs, int n_cat) {
    if (!o.predicates.empty()) {
        PredicateSchema ps = read_predicates(o.predicates);
        ps.check_compatible(rs.schema);
        return ps;
    }
    if (rs.empty()) throw Error("replay set is empty");
    return make_limits(rs, n_cat, parse_predicate_source(o.limits));
}

std::string replay_fingerprint(const ReplaySet& rs) {
    std::string bytes;
    for (const auto& r : rs.records) {
        bytes += std::to_string(r.episode) + ',' + std::to_string(r.step);
        for (double v : r.state) bytes += ',' + format_double(v);
        bytes += ',' + std::to_string(r.action) + ',' + format_double(r.reward) + ',' +
                 (r.done ? '1' : '0') + (r.truncated ? '1' : '0') + '\n';
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(bytes)));
    return buf;
}

Json replay_json(const ReplaySet& rs) {
    return {{"records", rs.size()}, {"fingerprint", replay_fingerprint(rs)}};
}

// Explanations of every action with conditions, one per line.
void print_explanations(std::ostream& out, const PipelineResult& r, const PredicateSchema& ps) {
    for (std::size_t a = 0; a < r.conditions.size(); ++a) {
        const auto& name = r.rules.action_names[a];
        out << name << ": " << render_explanation(compress_levels(r.conditions[a]), ps, name) << '\n';
    }
}

// ------------------------------------------------------------ subcommands

struct TrainOptions {
    std::string env = "mountaincar";
    std::vector<int> bins;
    double alpha = 0.1;
    double gamma = 0.99;
    double eps_start = 1.0;
    double eps_end = 0.01;
    int episodes = 0;
    std::uint64_t seed = 0;
    std::string out = "policy.json";
    std::string curve;
};

TrainConfig train_config(const TrainOptions& o, const Environment& env) {
    TrainConfig c;
    const bool mc = env.name() == "mountaincar";
    c.bins = !o.bins.empty() ? o.bins : mc ? std::vector<int>{40, 40} : std::vector<int>{10, 10, 10, 10};
    c.alpha = o.alpha;
    c.gamma = o.gamma;
    c.epsilon_start = o.eps_start;
    c.epsilon_end = o.eps_end;
    c.episodes = o.episodes > 0 ? o.episodes : mc ? 20000 : 10000;
    c.seed = o.seed;
    return c;
}

int cmd_train(const TrainOptions& o, std::ostream& out) {
    auto env = make_environment(o.env);
    const TrainResult r = train_tabular_q(*env, train_config(o, *env));
    write_policy(r.policy, o.out);
    if (!o.curve.empty()) write_training_curve(r.curve, o.curve);
    const auto seeds = default_eval_seeds();
    const auto perf = eval_performance(r.policy.as_policy(), *env, seeds);
    out << "policy written to " << o.out << '\n'
        << "greedy mean return over seeds 0..9: " << format_double(perf.mean_cr) << " ("
        << perf.successes << "/10 successful)\n";
    return kExitOk;
}

struct CollectOptions {
    std::string policy = "policy.json";
    std::string env;
    std::size_t min_steps = 10000;
    std::string out = "replay.db";
};

int cmd_collect(const CollectOptions& o, std::ostream& out) {
    const TabularPolicy pol = read_policy(o.policy);
    auto env = make_environment(o.env.empty() ? pol.env_name() : o.env);
    const ReplaySet rs = collect_replay(*env, pol.as_policy(), o.min_steps);
    write_replay(rs, o.out, format_from_extension(o.out));
    const fs::path sidecar = default_sidecar_path(o.out);
    write_sidecar(rs, sidecar);
    out << rs.size() << " records from " << rs.records.back().episode + 1 << " episodes written to "
        << o.out << " (schema " << sidecar.string() << ")\n";
    return kExitOk;
}

struct ExplainOptions {
    ReplayOptions replay;
    PredicateOptions predicates;
    PipelineOptions pipeline;
    std::string question;
    std::string sql;
    bool llm = false;
    std::string out;
    bool json = false;
};

// Filters with a question (or raw SQL) and summarizes each action present.
Json explain_question(const ExplainOptions& o, const ReplaySet& rs, const PredicateSchema& ps,
                      const FileConfig& cfg, std::ostream& out, std::ostream& err) {
    const QueryContext ctx = QueryContext::of(rs, &ps);
    Json doc;
    std::string sql;
    std::optional<QueryAst> ast;
    if (!o.sql.empty()) {
        sql = o.sql;
    } else if (o.llm) {
        const LlmTranslation t = llm_translate(o.question, cfg.llm, ctx);
        doc["llm_candidate"] = t.candidate;
        if (t.validated) {
            sql = t.validated->sql();
        } else {
            err << "model SQL rejected: " << t.rejection << '\n';
            doc["llm_rejection"] = t.rejection;
            if (!t.structured_sql) throw ParseError("structured parse failed: " + t.structured_error, 0);
            err << "using the structured translation: " << *t.structured_sql << '\n';
            sql = *t.structured_sql;
        }
    } else {
        ast = parse_query(o.question, ctx);
        sql = to_sql(*ast, ctx);
    }
    const ValidatedQuery vq = validate_sql(sql, rs.schema);
    const ReplaySet filtered = filter(rs, vq);
    if (filtered.empty()) throw Error("no data matches query");

    const PipelineConfig pc = o.pipeline.config();
    const CbsOptions opts{pc.theta, pc.k_max, pc.seed, pc.empty};
    doc["question"] = o.question;
    doc["sql"] = vq.sql();
    doc["records"] = filtered.size();
    doc["predicates"] = {{"source", ps.source}, {"n_cat", ps.n_cat}};
    doc["theta"] = pc.theta;
    doc["k_max"] = pc.k_max;
    doc["seed"] = pc.seed;
    Json explanations = Json::array();
    for (std::size_t a = 0; a < rs.n_actions(); ++a) {
        const ReplaySet sub = filter_action(filtered, static_cast<ActionId>(a));
        if (sub.empty()) continue;
        const Summary s = summarize_cbs(sub, ps, opts);
        const auto& name = rs.action_names[a];
        const std::string text = render_explanation(compress_levels(s.conditions), ps, name);
        if (!o.json) out << text << '\n';
        Json e;
        e["action"] = a;
        e["action_name"] = name;
        e["records"] = sub.size();
        e["k"] = s.k;
        e["text"] = text;
        Json conds = Json::array();
        for (const auto& c : s.conditions) conds.push_back(condition_to_json(c, ps));
        e["conditions"] = std::move(conds);
        Json clusters = Json::array();
        for (const auto& cs : s.clusters) {
            clusters.push_back({{"size", cs.size},
                                {"centroid", cs.centroid},
                                {"unique_states", cs.instances.size()},
                                {"included", cs.included},
                                {"condition", describe(cs.condition, ps)},
                                {"dropped", cs.dropped}});
        }
        e["clusters"] = std::move(clusters);
        explanations.push_back(std::move(e));
    }
    doc["explanations"] = std::move(explanations);
    return doc;
}

int cmd_explain(const ExplainOptions& o, const FileConfig& cfg, std::ostream& out, std::ostream& err) {
    if (o.question.empty() && o.sql.empty()) throw Error("explain needs --question or --sql");
    const ReplaySet rs = load_replay(o.replay, cfg);
    const PredicateSchema ps = load_predicates(o.predicates, rs, default_ncat(o.predicates, ""));
    const Json doc = explain_question(o, rs, ps, cfg, out, err);
    if (o.json) out << doc.dump(2) << '\n';
    if (!o.out.empty()) write_json_file(doc, o.out);
    return kExitOk;
}

struct RulesOptions {
    ReplayOptions replay;
    PredicateOptions predicates;
    PipelineOptions pipeline;
    std::string method = "cbs";
    std::string env;
    std::string out = "rules.json";
    std::string predicates_out;
};

int cmd_rules(const RulesOptions& o, const FileConfig& cfg, std::ostream& out) {
    const ReplaySet rs = load_replay(o.replay, cfg);
    const bool ape = o.method == "ape";
    PredicateOptions po = o.predicates;
    if (ape && po.n_cat == 0) po.n_cat = 2;
    const PredicateSchema ps = load_predicates(po, rs, default_ncat(po, o.env));
    const PipelineConfig pc = o.pipeline.config();
    const PipelineResult r = ape ? run_ape_pipeline(rs, ps, pc) : run_pipeline(rs, ps, pc);
    if (ape) {
        for (std::size_t a = 0; a < rs.n_actions(); ++a) {
            if (ape_explain(rs, static_cast<ActionId>(a), ps).no_explanation) {
                out << rs.action_names[a] << ": no explanation (observed in every state)\n";
            }
        }
    }
    if (r.rules.empty()) throw Error("no rules could be extracted");
    write_rules(r.rules, o.out);
    if (!o.predicates_out.empty()) write_predicates(ps, o.predicates_out);
    print_explanations(out, r, ps);
    out << r.rules.rules.size() << " rules written to " << o.out << " (E_len " << r.properties.e_len
        << ", E_dup " << r.properties.e_dup << ")\n";
    return kExitOk;
}

struct EvalOptions {
    ReplayOptions replay;
    std::string rules = "rules.json";
    std::string env;
    std::string out = "eval_report.json";
};

int cmd_eval(const EvalOptions& o, const FileConfig& cfg, std::ostream& out) {
    const ReplaySet rs = load_replay(o.replay, cfg);
    const RuleSet rules = read_rules(o.rules);
    EvalReport report;
    report.config = {{"rules", {{"weight_kind", to_string(rules.weight_kind)},
                                {"n_cat", rules.schema.n_cat},
                                {"source", rules.schema.source},
                                {"count", rules.rules.size()}}},
                     {"replay", replay_json(rs)}};
    report.properties = eval_properties(rules.conditions_per_action());
    report.fidelity = eval_fidelity(rules, rs);
    if (!o.env.empty()) {
        auto env = make_environment(o.env);
        const auto seeds = default_eval_seeds();
        report.performance = eval_performance(rules, *env, seeds);
        report.config["env"] = env->name();
    }
    write_eval_report(report, o.out);
    out << format_table({{"rules", &report}}, "config");
    return kExitOk;
}

struct RefineOptions {
    ReplayOptions replay;
    PredicateOptions predicates;
    PipelineOptions pipeline;
    std::string mode = "dup";
    RefineConfig refine;
    std::string out = "predicates.refined.json";
    std::string trace;
};

int cmd_refine(const RefineOptions& o, const FileConfig& cfg, std::ostream& out) {
    const ReplaySet rs = load_replay(o.replay, cfg);
    const PredicateSchema ps = load_predicates(o.predicates, rs, default_ncat(o.predicates, ""));
    const PipelineConfig pc = o.pipeline.config();
    const RefineResult r = o.mode == "f1" ? maximize_f1(rs, ps, pc, o.refine)
                                          : minimize_duplicates(rs, ps, pc, o.refine);
    PredicateSchema refined = r.schema;
    refined.source = ps.source + "+" + (o.mode == "f1" ? "max_f1" : "min_dup");
    write_predicates(refined, o.out);
    if (!o.trace.empty()) write_trace(r, o.trace);
    std::size_t adopted = 0;
    for (const auto& s : r.trace) adopted += s.adopted ? 1 : 0;
    out << "E_dup " << r.input_e_dup << " -> " << r.e_dup << ", E_F1 " << std::fixed
        << std::setprecision(3) << r.input_f1 << " -> " << r.f1 << std::defaultfloat << " (" << adopted << " adopted of " << r.trace.size()
        << " candidates, " << r.iterations << " iterations)\n"
        << "refined predicates written to " << o.out << '\n';
    return kExitOk;
}

struct SweepOptions {
    ReplayOptions replay;
    PredicateOptions predicates;
    PipelineOptions pipeline;
    std::string grid = "theta";
    std::string env;
    std::string policy;
    std::size_t min_steps = 10000;
    std::string out_dir;
};

struct SweepCell {
    std::string label;
    PipelineConfig config;
    int n_cat = 0;
    PredicateSource source = PredicateSource::Gini;
    bool ape = false;
};

std::vector<SweepCell> sweep_cells(const SweepOptions& o, int n_cat) {
    const PipelineConfig base = o.pipeline.config();
    const PredicateSource src = parse_predicate_source(o.predicates.limits);
    std::vector<SweepCell> cells;
    if (o.grid == "theta") {
        for (int i = 1; i <= 10; ++i) {
            SweepCell c{"theta=" + format_double(i / 10.0), base, n_cat, src, false};
            c.config.theta = i / 10.0;
            cells.push_back(c);
        }
    } else if (o.grid == "ncat") {
        for (int n = 2; n <= 7; ++n) cells.push_back({"ncat=" + std::to_string(n), base, n, src, false});
    } else if (o.grid == "weights") {
        for (auto w : {WeightKind::W1, WeightKind::W2, WeightKind::W3, WeightKind::W4}) {
            SweepCell c{to_string(w), base, n_cat, src, false};
            c.config.weight = w;
            cells.push_back(c);
        }
    } else if (o.grid == "limits") {
        for (auto s : {PredicateSource::Gini, PredicateSource::Quantile}) {
            cells.push_back({to_string(s), base, n_cat, s, false});
        }
    } else {  // ape: binary predicates, APE against CBS
        for (auto s : {PredicateSource::Gini, PredicateSource::Quantile}) {
            cells.push_back({"APE " + to_string(s), base, 2, s, true});
            cells.push_back({"CBS " + to_string(s), base, 2, s, false});
        }
    }
    return cells;
}

int cmd_sweep(const SweepOptions& o, const FileConfig& cfg, std::ostream& out) {
    std::unique_ptr<Environment> env;
    if (!o.env.empty()) env = make_environment(o.env);
    ReplaySet rs;
    if (!o.replay.db.empty() || !cfg.db.empty()) {
        rs = load_replay(o.replay, cfg);
    } else if (env) {
        Policy policy;
        TabularPolicy pol;
        if (!o.policy.empty()) {
            pol = read_policy(o.policy);
        } else {
            TrainOptions defaults;
            pol = train_tabular_q(*env, train_config(defaults, *env)).policy;
        }
        rs = collect_replay(*env, pol.as_policy(), o.min_steps);
    } else {
        throw Error("sweep needs --db or --env");
    }
    const int n_cat = default_ncat(o.predicates, env ? env->name() : "");
    const auto seeds = default_eval_seeds();

    std::vector<EvalReport> reports;
    std::vector<std::string> labels;
    std::vector<std::string> notes;
    for (const auto& cell : sweep_cells(o, n_cat)) {
        const PredicateSchema ps = make_limits(rs, cell.n_cat, cell.source);
        const PipelineResult r = cell.ape ? run_ape_pipeline(rs, ps, cell.config)
                                          : run_pipeline(rs, ps, cell.config);
        if (r.rules.empty()) {
            notes.push_back(cell.label + ": no explanation generated");
            continue;
        }
        EvalReport rep;
        rep.config = cell.config.to_json();
        rep.config["n_cat"] = cell.n_cat;
        rep.config["limits"] = to_string(cell.source);
        rep.config["method"] = cell.ape ? "ape" : "cbs";
        rep.config["replay"] = replay_json(rs);
        rep.properties = r.properties;
        rep.fidelity = r.fidelity;
        if (env) rep.performance = eval_performance(r.rules, *env, seeds);
        if (!o.out_dir.empty()) {
            std::string file = cell.label;
            for (auto& ch : file) {
                if (!std::isalnum(static_cast<unsigned char>(ch)) && ch != '.') ch = '_';
            }
            write_eval_report(rep, fs::path(o.out_dir) / ("eval_" + file + ".json"));
            write_rules(r.rules, fs::path(o.out_dir) / ("rules_" + file + ".json"));
        }
        reports.push_back(std::move(rep));
        labels.push_back(cell.label);
    }
    std::vector<TableRow> rows;
    for (std::size_t i = 0; i < reports.size(); ++i) rows.push_back({labels[i], &reports[i]});
    out << "grid " << o.grid << " (" << rs.size() << " records)\n" << format_table(rows, o.grid);
    for (const auto& n : notes) out << n << '\n';
    return kExitOk;
}

struct ReplOptions {
    ExplainOptions explain;
};

int cmd_repl(const ReplOptions& o, const FileConfig& cfg, std::istream& in, std::ostream& out,
             std::ostream& err) {
    std::optional<ReplaySet> rs;
    std::optional<PredicateSchema> ps;
    out << "xrl> " << std::flush;
    std::string line;
    while (std::getline(in, line)) {
        const std::string_view cmd = trim(line);
        if (cmd == "exit" || cmd == "quit") return kExitOk;
        if (cmd.empty()) {
            out << "xrl> " << std::flush;
            continue;
        }
        if (cmd == "help") {
            out << "questions: when action = <name> | when will you do <name> | what if <feature> "
                   "<op> <number> [and ...] | what if <feature> is <level>\n"
                   "sql <SELECT ...> | llm <free text> | exit\n";
        } else {
            try {
                if (!rs) {
                    rs = load_replay(o.explain.replay, cfg);
                    ps = load_predicates(o.explain.predicates, *rs, default_ncat(o.explain.predicates, ""));
                }
                ExplainOptions e = o.explain;
                if (cmd.starts_with("sql ")) {
                    e.sql = std::string(cmd.substr(4));
                } else if (cmd.starts_with("llm ")) {
                    e.question = std::string(cmd.substr(4));
                    e.llm = true;
                } else {
                    e.question = std::string(cmd);
                }
                e.json = false;
                explain_question(e, *rs, *ps, cfg, out, err);
            } catch (const UnavailableError& ex) {
                err << "error: " << ex.what() << "\nthe structured syntax still works, e.g. "
                    << "'when action = <name>'\n";
            } catch (const Error& ex) {
                err << "error: " << ex.what() << '\n';
            }
        }
        out << "xrl> " << std::flush;
    }
    return kExitOk;
}

std::string error_kind(const std::exception& e) {
    if (dynamic_cast<const SchemaError*>(&e)) return "schema";
    if (dynamic_cast<const ParseError*>(&e)) return "parse";
    if (dynamic_cast<const IntegrityError*>(&e)) return "integrity";
    if (dynamic_cast<const ValidationError*>(&e)) return "validation";
    if (dynamic_cast<const ResolutionError*>(&e)) return "resolution";
    if (dynamic_cast<const InvalidActionError*>(&e)) return "invalid_action";
    if (dynamic_cast<const ResourceError*>(&e)) return "resource";
    if (dynamic_cast<const UnavailableError*>(&e)) return "unavailable";
    if (dynamic_cast<const TrainingError*>(&e)) return "training";
    return "error";
}

}  // namespace

int run_command(const std::vector<std::string>& args, std::istream& in, std::ostream& out,
                std::ostream& err) {
    CLI::App app{"Explain a reinforcement-learning policy from its replay data", "xrl"};
    app.require_subcommand(1);
    std::string config_path = "explainer.toml";
    app.add_option("--config", config_path, "Configuration file");

    TrainOptions train;
    auto* c_train = app.add_subcommand("train", "Train a tabular Q-learning agent");
    c_train->add_option("--env", train.env, "mountaincar or cartpole");
    c_train->add_option("--bins", train.bins, "Bins per feature")->delimiter(',');
    c_train->add_option("--alpha", train.alpha, "Learning rate");
    c_train->add_option("--gamma", train.gamma, "Discount");
    c_train->add_option("--epsilon-start", train.eps_start, "Initial exploration rate");
    c_train->add_option("--epsilon-end", train.eps_end, "Final exploration rate");
    c_train->add_option("--episodes", train.episodes, "Training episodes (default 20000 / 10000)");
    c_train->add_option("--seed", train.seed, "Training seed");
    c_train->add_option("--out", train.out, "Policy file");
    c_train->add_option("--curve", train.curve, "Training curve CSV");

    CollectOptions collect;
    auto* c_collect = app.add_subcommand("collect", "Collect replay data from a policy");
    c_collect->add_option("--policy", collect.policy, "Policy file");
    c_collect->add_option("--env", collect.env, "Environment (default: the policy's)");
    c_collect->add_option("--min-steps", collect.min_steps, "Minimum number of records");
    c_collect->add_option("--out", collect.out, "Replay file (.db, .csv or .jsonl)");

    ExplainOptions explain;
    auto* c_explain = app.add_subcommand("explain", "Answer a question with a textual explanation");
    add_replay_options(c_explain, explain.replay);
    add_predicate_options(c_explain, explain.predicates);
    add_pipeline_options(c_explain, explain.pipeline);
    c_explain->add_option("--question,-q", explain.question, "Question in the structured grammar");
    c_explain->add_option("--sql", explain.sql, "SELECT statement instead of a question");
    c_explain->add_flag("--llm", explain.llm, "Translate the question with the configured LLM endpoint");
    c_explain->add_option("--out", explain.out, "Summary JSON file");
    c_explain->add_flag("--json", explain.json, "Print the summary JSON instead of text");

    RulesOptions rules;
    auto* c_rules = app.add_subcommand("rules", "Extract weighted rules for every action");
    add_replay_options(c_rules, rules.replay);
    add_predicate_options(c_rules, rules.predicates);
    add_pipeline_options(c_rules, rules.pipeline);
    c_rules->add_option("--method", rules.method, "Summarizer")->check(CLI::IsMember({"cbs", "ape"}));
    c_rules->add_option("--env", rules.env, "Environment (selects the default --ncat)");
    c_rules->add_option("--out", rules.out, "Rules file");
    c_rules->add_option("--predicates-out", rules.predicates_out, "Write the predicates used");

    EvalOptions eval;
    auto* c_eval = app.add_subcommand("eval", "Evaluate rules against replay data and an environment");
    add_replay_options(c_eval, eval.replay);
    c_eval->add_option("--rules", eval.rules, "Rules file");
    c_eval->add_option("--env", eval.env, "Deploy the rules in this environment (seeds 0..9)");
    c_eval->add_option("--out", eval.out, "Report file");

    RefineOptions refine;
    auto* c_refine = app.add_subcommand("refine", "Refine predicate thresholds");
    add_replay_options(c_refine, refine.replay);
    add_predicate_options(c_refine, refine.predicates);
    add_pipeline_options(c_refine, refine.pipeline);
    c_refine->add_option("--mode", refine.mode, "dup (fewer duplicates) or f1 (higher fidelity)")
        ->check(CLI::IsMember({"dup", "f1"}));
    c_refine->add_option("--m", refine.refine.m, "Split values per duplicate")->check(CLI::PositiveNumber);
    c_refine->add_option("--budget", refine.refine.budget, "Iterations (default 5 / 10)")
        ->check(CLI::PositiveNumber);
    c_refine->add_option("--alpha", refine.refine.alpha, "Adjustment rate")->check(CLI::Range(0.0, 1.0));
    c_refine->add_flag("--strict", refine.refine.strict_f1, "Adopt duplicate fixes only if F1 rises");
    c_refine->add_option("--out", refine.out, "Refined predicate file");
    c_refine->add_option("--trace", refine.trace, "Refinement trace JSON");

    SweepOptions sweep;
    auto* c_sweep = app.add_subcommand("sweep", "Run a parameter grid and print one table");
    add_replay_options(c_sweep, sweep.replay);
    add_predicate_options(c_sweep, sweep.predicates);
    add_pipeline_options(c_sweep, sweep.pipeline);
    c_sweep->add_option("--grid", sweep.grid, "Parameter to vary")
        ->check(CLI::IsMember({"theta", "ncat", "weights", "limits", "ape"}));
    c_sweep->add_option("--env", sweep.env, "Environment for E_CR/E_TS/E_AR (and replay if no --db)");
    c_sweep->add_option("--policy", sweep.policy, "Policy used to collect replay when no --db");
    c_sweep->add_option("--min-steps", sweep.min_steps, "Replay size when collecting");
    c_sweep->add_option("--out-dir", sweep.out_dir, "Write per-cell reports and rules here");

    ReplOptions repl;
    auto* c_repl = app.add_subcommand("repl", "Interactive question loop (exit to quit)");
    add_replay_options(c_repl, repl.explain.replay);
    add_predicate_options(c_repl, repl.explain.predicates);
    add_pipeline_options(c_repl, repl.explain.pipeline);

    std::vector<std::string> argv_store{"xrl"};
    argv_store.insert(argv_store.end(), args.begin(), args.end());
    std::vector<const char*> argv;
    for (const auto& a : argv_store) argv.push_back(a.c_str());

    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::ParseError& e) {
        app.exit(e, out, err);
        return kExitUsage;
    }

    try {
        const bool explicit_config = app.count("--config") > 0;
        const FileConfig cfg = load_config(config_path, explicit_config);
        if (*c_train) return cmd_train(train, out);
        if (*c_collect) return cmd_collect(collect, out);
        if (*c_explain) return cmd_explain(explain, cfg, out, err);
        if (*c_rules) return cmd_rules(rules, cfg, out);
        if (*c_eval) return cmd_eval(eval, cfg, out);
        if (*c_refine) return cmd_refine(refine, cfg, out);
        if (*c_sweep) return cmd_sweep(sweep, cfg, out);
        if (*c_repl) return cmd_repl(repl, cfg, in, out, err);
    } catch (const std::exception& e) {
        Json msg{{"error", error_kind(e)}, {"message", e.what()}};
        err << msg.dump() << '\n';
        return kExitFailure;
    }
    return kExitUsage;
}

int run_command(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return run_command(args, std::cin, std::cout, std::cerr);
}

}  // namespace xrl
