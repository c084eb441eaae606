#pragma once

#include <string>
#include <vector>

#include "hqcm/data.hpp"
#include "hqcm/model.hpp"
#include "hqcm/tensor.hpp"

namespace hqcm {

struct ClassMetrics {
    double precision = 0;
    double recall = 0;
    double f1 = 0;
    int support = 0;
    bool flagged = false;  // a zero denominator was reported as 0
};

struct MetricsReport {
    std::vector<std::vector<int>> confusion;  // rows = actual, cols = predicted
    std::vector<ClassMetrics> per_class;
    ClassMetrics macro_avg;
    ClassMetrics weighted_avg;
    double accuracy = 0;
    int total = 0;
};

MetricsReport classification_report(const std::vector<int>& predictions, const std::vector<int>& labels,
                                    int num_classes);

std::string report_to_json(const MetricsReport& report);
std::string report_to_text(const MetricsReport& report);

/// Jaccard of (attention >= tau * max(attention)) against a binary mask.
/// An empty union counts as perfect agreement (1.0) and sets *flagged.
double jaccard_at(const Tensor<float>& attention, const Tensor<float>& mask, double tau,
                  bool* flagged = nullptr);

struct WilcoxonResult {
    double statistic = 0;  // min of the positive/negative rank sums
    double p_value = 1.0;
    int n = 0;             // pairs remaining after dropping zero differences
    bool exact = false;    // enumeration (n <= 20) vs normal approximation
    bool flagged = false;  // all differences were zero
};

/// Two-sided Wilcoxon signed-rank test on paired scores. Zero differences
/// are dropped; tied |differences| get average ranks. Exact p by
/// enumerating all 2^n sign assignments for n <= 20, otherwise a normal
/// approximation with tie and continuity corrections.
WilcoxonResult wilcoxon_signed_rank(const std::vector<double>& a, const std::vector<double>& b);

struct ComparisonRow {
    double tau = 0;
    double mean_a = 0;
    double mean_b = 0;
    double statistic = 0;
    double p_value = 1.0;
    bool flagged = false;
};

/// Per-threshold mean Jaccard for two models on the same (tumor-bearing)
/// test samples, plus the Wilcoxon test on the paired per-sample scores.
std::vector<ComparisonRow> compare_models(Model<float>& model_a, Model<float>& model_b,
                                          const Dataset& dataset,
                                          const std::vector<double>& thresholds = {0.99, 0.90, 0.75});

std::string comparison_to_text(const std::vector<ComparisonRow>& rows, const std::string& name_a,
                               const std::string& name_b);

enum class EmbeddingLayer { quantum_out, pre_head };

EmbeddingLayer embedding_layer_from_name(const std::string& name);

/// CSV rows `sample_id,label,v1..vm` over every sample of the split;
/// quantum_out is the measured layer (width c*q), pre_head the projection
/// feeding it (width c*2^q).
void export_embeddings(Model<float>& model, const Dataset& dataset, Split split, EmbeddingLayer layer,
                       const std::string& path);

}  // namespace hqcm
