#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>

#include "xrl/ape.hpp"
#include "xrl/cli.hpp"
#include "xrl/pipeline.hpp"
#include "xrl/query.hpp"
#include "xrl/refiner.hpp"
#include "xrl/serialize.hpp"
#include "xrl/textualizer.hpp"
#include "xrl/trainer.hpp"

namespace py = pybind11;
using namespace xrl;

namespace {

// JSON crosses the boundary as text; the Python side decodes it.
std::string dump(const Json& j) { return j.dump(); }

py::tuple run_cli(const std::vector<std::string>& args, const std::string& input) {
    std::istringstream in(input);
    std::ostringstream out, err;
    int code = 0;
    {
        py::gil_scoped_release release;
        code = run_command(args, in, out, err);
    }
    return py::make_tuple(code, out.str(), err.str());
}

}  // namespace

PYBIND11_MODULE(_xrl, m) {
    m.doc() = "Rule extraction and explanation of reinforcement-learning policies";

    auto base = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
    py::register_exception<SchemaError>(m, "SchemaError", base.ptr());
    py::register_exception<ParseError>(m, "ParseError", base.ptr());
    py::register_exception<IntegrityError>(m, "IntegrityError", base.ptr());
    py::register_exception<ValidationError>(m, "ValidationError", base.ptr());
    py::register_exception<ResolutionError>(m, "ResolutionError", base.ptr());
    py::register_exception<InvalidActionError>(m, "InvalidActionError", base.ptr());
    py::register_exception<ResourceError>(m, "ResourceError", base.ptr());
    py::register_exception<TrainingError>(m, "TrainingError", base.ptr());
    py::register_exception<UnavailableError>(m, "UnavailableError", base.ptr());

    py::class_<FeatureBounds>(m, "FeatureBounds")
        .def_readonly("min", &FeatureBounds::min)
        .def_readonly("max", &FeatureBounds::max);

    py::class_<FeatureSchema>(m, "FeatureSchema")
        .def_readonly("names", &FeatureSchema::names)
        .def_readonly("units", &FeatureSchema::units)
        .def_readonly("bounds", &FeatureSchema::bounds);

    py::class_<ReplayRecord>(m, "ReplayRecord")
        .def_readonly("episode", &ReplayRecord::episode)
        .def_readonly("step", &ReplayRecord::step)
        .def_readonly("state", &ReplayRecord::state)
        .def_readonly("action", &ReplayRecord::action)
        .def_readonly("reward", &ReplayRecord::reward)
        .def_readonly("done", &ReplayRecord::done)
        .def_readonly("truncated", &ReplayRecord::truncated);

    py::class_<ReplaySet>(m, "ReplaySet")
        .def_readonly("schema", &ReplaySet::schema)
        .def_readonly("records", &ReplaySet::records)
        .def_readonly("action_names", &ReplaySet::action_names)
        .def("__len__", &ReplaySet::size)
        .def("filter_sql",
             [](const ReplaySet& rs, const std::string& sql) { return filter(rs, validate_sql(sql, rs.schema)); },
             py::arg("sql"), "Records matching a whitelisted SELECT statement.")
        .def("filter_action", [](const ReplaySet& rs, ActionId a) { return filter_action(rs, a); });

    m.def(
        "load_replay",
        [](const std::filesystem::path& path, std::optional<std::filesystem::path> sidecar) {
            if (!sidecar) {
                const auto guess = default_sidecar_path(path);
                if (std::filesystem::exists(guess)) sidecar = guess;
            }
            return ingest(path, format_from_extension(path), sidecar);
        },
        py::arg("path"), py::arg("sidecar") = py::none());
    m.def(
        "save_replay",
        [](const ReplaySet& rs, const std::filesystem::path& path) {
            write_replay(rs, path, format_from_extension(path));
            write_sidecar(rs, default_sidecar_path(path));
        },
        py::arg("replay"), py::arg("path"));

    py::class_<PredicateSchema>(m, "PredicateSchema")
        .def_readonly("n_cat", &PredicateSchema::n_cat)
        .def_readonly("source", &PredicateSchema::source)
        .def_property_readonly("names",
                               [](const PredicateSchema& s) {
                                   std::vector<std::string> out;
                                   for (const auto& f : s.features) out.push_back(f.name);
                                   return out;
                               })
        .def_property_readonly("thresholds",
                               [](const PredicateSchema& s) {
                                   std::vector<std::vector<double>> out;
                                   for (const auto& f : s.features) out.push_back(f.thresholds);
                                   return out;
                               })
        .def("discretize", [](const PredicateSchema& s, const std::vector<double>& x) { return discretize(x, s); })
        .def("to_json", [](const PredicateSchema& s) { return dump(Json(s)); })
        .def("save", [](const PredicateSchema& s, const std::filesystem::path& p) { write_predicates(s, p); });

    m.def("load_predicates", &read_predicates, py::arg("path"));
    m.def(
        "make_limits",
        [](const ReplaySet& rs, int n_cat, const std::string& source) {
            return make_limits(rs, n_cat, parse_predicate_source(source));
        },
        py::arg("replay"), py::arg("n_cat"), py::arg("source") = "gini");

    py::class_<PipelineConfig>(m, "PipelineConfig")
        .def(py::init([](double theta, int k_max, std::uint64_t seed, const std::string& weights,
                         const std::string& fallback, bool drop_empty) {
                 PipelineConfig c;
                 c.theta = theta;
                 c.k_max = k_max;
                 c.seed = seed;
                 c.weight = parse_weight_kind(weights);
                 if (fallback == "abstain") {
                     c.fallback = Fallback::Abstain;
                 } else if (fallback != "approximate") {
                     throw Error("fallback must be 'approximate' or 'abstain'");
                 }
                 c.empty = drop_empty ? EmptyCondition::Drop : EmptyCondition::Keep;
                 return c;
             }),
             py::arg("theta") = 0.7, py::arg("k_max") = 40, py::arg("seed") = 0, py::arg("weights") = "w2",
             py::arg("fallback") = "approximate", py::arg("drop_empty") = false)
        .def_readonly("theta", &PipelineConfig::theta)
        .def_readonly("k_max", &PipelineConfig::k_max)
        .def("to_json", [](const PipelineConfig& c) { return dump(c.to_json()); });

    py::class_<RuleCounts>(m, "RuleCounts")
        .def_readonly("n_ca", &RuleCounts::n_ca)
        .def_readonly("n_c", &RuleCounts::n_c)
        .def_readonly("n_a", &RuleCounts::n_a)
        .def_readonly("n_total", &RuleCounts::n_total);

    py::class_<Rule>(m, "Rule")
        .def_readonly("action", &Rule::action)
        .def_readonly("occurrence", &Rule::occurrence)
        .def_readonly("counts", &Rule::counts);

    py::class_<RuleSet>(m, "RuleSet")
        .def_readonly("schema", &RuleSet::schema)
        .def_readonly("action_names", &RuleSet::action_names)
        .def_readonly("rules", &RuleSet::rules)
        .def("__len__", [](const RuleSet& r) { return r.rules.size(); })
        .def("describe",
             [](const RuleSet& r) {
                 std::vector<std::string> out;
                 for (const auto& rule : r.rules) out.push_back(describe(rule.condition, r.schema));
                 return out;
             })
        .def("explain",
             [](const RuleSet& r) {
                 std::vector<std::string> out;
                 const auto per_action = r.conditions_per_action();
                 for (std::size_t a = 0; a < per_action.size(); ++a) {
                     if (per_action[a].empty()) continue;
                     out.push_back(render_explanation(compress_levels(per_action[a]), r.schema, r.action_names[a]));
                 }
                 return out;
             })
        .def(
            "select",
            [](const RuleSet& r, const std::vector<double>& state) -> std::optional<ActionId> {
                return select_action(r, state).action;
            },
            py::arg("state"))
        .def("save", [](const RuleSet& r, const std::filesystem::path& p) { write_rules(r, p); });
    m.def("load_rules", &read_rules, py::arg("path"));

    py::class_<PropertyMetrics>(m, "PropertyMetrics")
        .def_readonly("e_len", &PropertyMetrics::e_len)
        .def_readonly("e_dup", &PropertyMetrics::e_dup);

    py::class_<FidelityMetrics>(m, "FidelityMetrics")
        .def_readonly("e_approx", &FidelityMetrics::e_approx)
        .def_readonly("accuracy", &FidelityMetrics::accuracy)
        .def_readonly("recall", &FidelityMetrics::recall)
        .def_readonly("f1", &FidelityMetrics::f1)
        .def_readonly("confusion", &FidelityMetrics::confusion)
        .def_readonly("n_abstained", &FidelityMetrics::n_abstained);

    py::class_<EpisodeMetrics>(m, "EpisodeMetrics")
        .def_readonly("seed", &EpisodeMetrics::seed)
        .def_readonly("cumulative_reward", &EpisodeMetrics::cumulative_reward)
        .def_readonly("steps", &EpisodeMetrics::steps)
        .def_readonly("success", &EpisodeMetrics::success);

    py::class_<PerformanceMetrics>(m, "PerformanceMetrics")
        .def_readonly("episodes", &PerformanceMetrics::episodes)
        .def_readonly("mean_cr", &PerformanceMetrics::mean_cr)
        .def_readonly("mean_ts", &PerformanceMetrics::mean_ts)
        .def_readonly("mean_ar", &PerformanceMetrics::mean_ar)
        .def_readonly("successes", &PerformanceMetrics::successes);

    py::class_<PipelineResult>(m, "PipelineResult")
        .def_readonly("rules", &PipelineResult::rules)
        .def_readonly("properties", &PipelineResult::properties)
        .def_readonly("fidelity", &PipelineResult::fidelity);

    m.def(
        "run_pipeline",
        [](const ReplaySet& rs, const PredicateSchema& ps, const PipelineConfig& cfg, const std::string& method) {
            py::gil_scoped_release release;
            if (method == "ape") return run_ape_pipeline(rs, ps, cfg);
            if (method != "cbs") throw Error("method must be 'cbs' or 'ape'");
            return run_pipeline(rs, ps, cfg);
        },
        py::arg("replay"), py::arg("predicates"), py::arg("config") = PipelineConfig{}, py::arg("method") = "cbs");

    m.def(
        "evaluate_performance",
        [](const RuleSet& rules, const std::string& env_name, std::vector<std::uint64_t> seeds) {
            auto env = make_environment(env_name);
            if (seeds.empty()) seeds = default_eval_seeds();
            py::gil_scoped_release release;
            return eval_performance(rules, *env, seeds);
        },
        py::arg("rules"), py::arg("env"), py::arg("seeds") = std::vector<std::uint64_t>{});

    py::class_<RefineResult>(m, "RefineResult")
        .def_readonly("schema", &RefineResult::schema)
        .def_readonly("e_dup", &RefineResult::e_dup)
        .def_readonly("f1", &RefineResult::f1)
        .def_readonly("input_e_dup", &RefineResult::input_e_dup)
        .def_readonly("input_f1", &RefineResult::input_f1)
        .def_readonly("iterations", &RefineResult::iterations)
        .def("trace_json", [](const RefineResult& r) { return dump(trace_to_json(r)); });

    m.def(
        "refine",
        [](const ReplaySet& rs, const PredicateSchema& ps, const std::string& mode, const PipelineConfig& cfg,
           int m_split, int budget, double alpha, bool strict) {
            RefineConfig rc;
            rc.m = m_split;
            rc.budget = budget;
            rc.alpha = alpha;
            rc.strict_f1 = strict;
            py::gil_scoped_release release;
            if (mode == "dup") return minimize_duplicates(rs, ps, cfg, rc);
            if (mode == "f1") return maximize_f1(rs, ps, cfg, rc);
            throw Error("mode must be 'dup' or 'f1'");
        },
        py::arg("replay"), py::arg("predicates"), py::arg("mode") = "dup", py::arg("config") = PipelineConfig{},
        py::arg("m") = 5, py::arg("budget") = 0, py::arg("alpha") = 0.5, py::arg("strict") = false);

    m.def(
        "question_to_sql",
        [](const ReplaySet& rs, const std::string& question, const PredicateSchema* ps) {
            const QueryContext ctx = QueryContext::of(rs, ps);
            return validate_sql(to_sql(parse_query(question, ctx), ctx), rs.schema).sql();
        },
        py::arg("replay"), py::arg("question"), py::arg("predicates") = nullptr);
    m.def(
        "validate_sql", [](const ReplaySet& rs, const std::string& sql) { return validate_sql(sql, rs.schema).sql(); },
        py::arg("replay"), py::arg("sql"));

    m.def(
        "qm_minimize",
        [](const std::vector<std::uint32_t>& on, const std::vector<std::uint32_t>& dc, int nvars) {
            std::vector<std::string> out;
            for (const auto& imp : qm_minimize(on, dc, nvars)) out.push_back(imp.pattern());
            return out;
        },
        py::arg("onset"), py::arg("dcset"), py::arg("nvars"), "Minimized cover as '0'/'1'/'-' patterns.");

    py::class_<TabularPolicy>(m, "TabularPolicy")
        .def_property_readonly("env_name", &TabularPolicy::env_name)
        .def("act", [](const TabularPolicy& p, const std::vector<double>& s) { return p.act(s); })
        .def("save", [](const TabularPolicy& p, const std::filesystem::path& path) { write_policy(p, path); });
    m.def("load_policy", &read_policy, py::arg("path"));

    m.def(
        "train",
        [](const std::string& env_name, std::vector<int> bins, int episodes, std::uint64_t seed, double alpha,
           double gamma) {
            auto env = make_environment(env_name);
            TrainConfig cfg;
            cfg.bins = bins.empty() ? std::vector<int>(env->feature_schema().size(), env_name == "cartpole" ? 10 : 40)
                                    : std::move(bins);
            cfg.episodes = episodes;
            cfg.seed = seed;
            cfg.alpha = alpha;
            cfg.gamma = gamma;
            TrainResult r;
            {
                py::gil_scoped_release release;
                r = train_tabular_q(*env, cfg);
            }
            return py::make_tuple(std::move(r.policy), std::move(r.curve));
        },
        py::arg("env"), py::arg("bins") = std::vector<int>{}, py::arg("episodes") = 1000, py::arg("seed") = 0,
        py::arg("alpha") = 0.1, py::arg("gamma") = 0.99, "Returns (policy, per-episode returns).");

    m.def(
        "collect",
        [](const TabularPolicy& policy, std::size_t min_steps) {
            auto env = make_environment(policy.env_name());
            py::gil_scoped_release release;
            return collect_replay(*env, policy.as_policy(), min_steps);
        },
        py::arg("policy"), py::arg("min_steps") = 10000);

    m.def("run_cli", &run_cli, py::arg("args"), py::arg("input") = "",
          "Runs the command-line tool in-process; returns (exit_code, stdout, stderr).");
}
