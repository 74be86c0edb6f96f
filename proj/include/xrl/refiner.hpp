#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "xrl/pipeline.hpp"

namespace xrl {

struct RefineConfig {
    /// Split values proposed per duplicated condition and feature.
    int m = 5;
    /// Iteration budget; 0 selects 5 for minimize_duplicates and 10 for maximize_f1.
    int budget = 0;
    /// Step as a share of the distance to the neighbouring constraint.
    double alpha = 0.5;
    /// minimize_duplicates adopts only moves that raise F1.
    bool strict_f1 = false;

    void validate() const;
};

struct RefineStep {
    int iteration = 0;
    std::string feature;
    std::size_t index = 0;
    double from = 0.0;
    double to = 0.0;
    std::size_t e_dup = 0;
    double f1 = 0.0;
    bool adopted = false;
};

struct RefineResult {
    PredicateSchema schema;
    std::size_t e_dup = 0;
    double f1 = 0.0;
    std::size_t input_e_dup = 0;
    double input_f1 = 0.0;
    int iterations = 0;
    std::vector<RefineStep> trace;
};

/// Proposes thresholds from Gini trees fitted on the records of each
/// duplicated condition, adopts the candidate with the fewest duplicates
/// (then highest F1) as long as F1 does not drop, and returns the visited
/// schema with the fewest duplicates, ties to the higher F1.
RefineResult minimize_duplicates(const ReplaySet& rs, const PredicateSchema& schema,
                                 const PipelineConfig& pipeline, const RefineConfig& config);

/// Moves single thresholds down or up by alpha times the distance to the
/// neighbouring threshold (or data extremum) and adopts the best strictly
/// improving move per iteration.
RefineResult maximize_f1(const ReplaySet& rs, const PredicateSchema& schema,
                         const PipelineConfig& pipeline, const RefineConfig& config);

/// {input:{E_dup,E_F1}, output:{E_dup,E_F1}, iterations, steps:[...]}
Json trace_to_json(const RefineResult& result);
void write_trace(const RefineResult& result, const std::filesystem::path& target);

}  // namespace xrl
