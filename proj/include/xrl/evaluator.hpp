#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "xrl/envs.hpp"
#include "xrl/rules.hpp"
#include "xrl/serialize.hpp"

namespace xrl {

struct PropertyMetrics {
    /// Total conditions, summed over actions (distinct within each action).
    std::size_t e_len = 0;
    /// Distinct conditions attached to two or more actions.
    std::size_t e_dup = 0;
};

PropertyMetrics eval_properties(const ConditionsPerAction& conds);

/// Conditions attached to two or more actions, ascending.
std::vector<Condition> duplicated_conditions(const ConditionsPerAction& conds);

struct FidelityMetrics {
    /// Share of records matching no rule before the fallback.
    double e_approx = 0.0;
    double accuracy = 0.0;
    /// Macro averages over the actions present in the truth or the predictions.
    double recall = 0.0;
    double f1 = 0.0;
    /// confusion[true][predicted]; abstentions are not counted.
    std::vector<std::vector<std::size_t>> confusion;
    std::size_t n_records = 0;
    std::size_t n_abstained = 0;
};

/// Predicts every record with select_action (the rule set's fallback
/// applies) and scores it against the replayed action.
FidelityMetrics eval_fidelity(const RuleSet& rules, const ReplaySet& rs);
FidelityMetrics eval_fidelity_levels(const RuleSet& rules, const std::vector<Levels>& levels,
                                     std::span<const ActionId> actions);

/// Macro recall and F1 of a confusion matrix, zero for undefined ratios.
/// `unpredicted[a]` adds records of true label a that received no prediction.
std::pair<double, double> macro_recall_f1(const std::vector<std::vector<std::size_t>>& confusion,
                                          std::span<const std::size_t> unpredicted = {});

struct EpisodeMetrics {
    std::uint64_t seed = 0;
    /// E_CR, E_TS and E_AR of the episode.
    double cumulative_reward = 0.0;
    std::size_t steps = 0;
    double average_reward = 0.0;
    bool success = false;
    std::size_t approximated_steps = 0;
};

struct PerformanceMetrics {
    std::vector<EpisodeMetrics> episodes;
    double mean_cr = 0.0;
    double mean_ts = 0.0;
    double mean_ar = 0.0;
    std::size_t successes = 0;
};

std::vector<std::uint64_t> default_eval_seeds();

PerformanceMetrics eval_performance(const Policy& policy, Environment& env,
                                    std::span<const std::uint64_t> seeds);
/// Deploys the rules with the approximation fallback.
PerformanceMetrics eval_performance(const RuleSet& rules, Environment& env,
                                    std::span<const std::uint64_t> seeds);

/// x / max|values| * 100 for every value. Throws when every value is zero.
std::vector<double> normalize_scores(std::span<const double> values);
double normalize_score(double x, double env_max);

struct EvalReport {
    /// Configuration that produced the report; hashed into `fingerprint`.
    Json config = Json::object();
    PropertyMetrics properties;
    FidelityMetrics fidelity;
    std::optional<PerformanceMetrics> performance;

    /// 16 hex digits of FNV-1a over the compact config dump.
    std::string fingerprint() const;
};

Json to_json(const EvalReport& report);
void write_eval_report(const EvalReport& report, const std::filesystem::path& target);

/// One row of the metric table.
struct TableRow {
    std::string label;
    const EvalReport* report = nullptr;
};

/// Fixed-width table: label, E_app, E_len, E_dup, E_acc, E_rec, E_F1, E_CR,
/// E_TS, E_AR. Missing performance prints "-".
std::string format_table(const std::vector<TableRow>& rows, std::string_view label_header);

std::uint64_t fnv1a64(std::string_view bytes);

}  // namespace xrl
