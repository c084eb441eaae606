#include "hqcm/metrics.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace hqcm {

MetricsReport classification_report(const std::vector<int>& predictions, const std::vector<int>& labels,
                                    int num_classes) {
    if (predictions.size() != labels.size())
        throw std::invalid_argument("report: prediction/label length mismatch");
    if (predictions.empty()) throw std::invalid_argument("report: no samples");

    MetricsReport rep;
    rep.total = static_cast<int>(predictions.size());
    rep.confusion.assign(static_cast<std::size_t>(num_classes),
                         std::vector<int>(static_cast<std::size_t>(num_classes), 0));
    for (std::size_t i = 0; i < predictions.size(); ++i) {
        const int y = labels[i], p = predictions[i];
        if (y < 0 || y >= num_classes || p < 0 || p >= num_classes)
            throw std::invalid_argument("report: class index out of range");
        ++rep.confusion[static_cast<std::size_t>(y)][static_cast<std::size_t>(p)];
    }

    int trace = 0;
    rep.per_class.resize(static_cast<std::size_t>(num_classes));
    for (int k = 0; k < num_classes; ++k) {
        int tp = rep.confusion[static_cast<std::size_t>(k)][static_cast<std::size_t>(k)];
        int fp = 0, fn = 0, support = 0;
        for (int j = 0; j < num_classes; ++j) {
            if (j != k) {
                fp += rep.confusion[static_cast<std::size_t>(j)][static_cast<std::size_t>(k)];
                fn += rep.confusion[static_cast<std::size_t>(k)][static_cast<std::size_t>(j)];
            }
            support += rep.confusion[static_cast<std::size_t>(k)][static_cast<std::size_t>(j)];
        }
        trace += tp;
        ClassMetrics& m = rep.per_class[static_cast<std::size_t>(k)];
        m.support = support;
        if (tp + fp == 0) {
            m.flagged = true;
        } else {
            m.precision = static_cast<double>(tp) / (tp + fp);
        }
        if (tp + fn == 0) {
            m.flagged = true;
        } else {
            m.recall = static_cast<double>(tp) / (tp + fn);
        }
        if (m.precision + m.recall > 0)
            m.f1 = 2.0 * m.precision * m.recall / (m.precision + m.recall);
        else
            m.flagged = true;
    }
    rep.accuracy = static_cast<double>(trace) / rep.total;

    for (const auto& m : rep.per_class) {
        rep.macro_avg.precision += m.precision / num_classes;
        rep.macro_avg.recall += m.recall / num_classes;
        rep.macro_avg.f1 += m.f1 / num_classes;
        rep.weighted_avg.precision += m.precision * m.support / rep.total;
        rep.weighted_avg.recall += m.recall * m.support / rep.total;
        rep.weighted_avg.f1 += m.f1 * m.support / rep.total;
        rep.macro_avg.flagged = rep.macro_avg.flagged || m.flagged;
        rep.weighted_avg.flagged = rep.weighted_avg.flagged || m.flagged;
    }
    rep.macro_avg.support = rep.weighted_avg.support = rep.total;
    return rep;
}

std::string report_to_json(const MetricsReport& report) {
    nlohmann::json j;
    j["overall_accuracy"] = report.accuracy;
    j["total"] = report.total;
    j["confusion_matrix"] = report.confusion;
    auto metrics_json = [](const ClassMetrics& m) {
        nlohmann::json e;
        e["precision"] = m.precision;
        e["recall"] = m.recall;
        e["f1"] = m.f1;
        e["support"] = m.support;
        if (m.flagged) e["flagged"] = true;
        return e;
    };
    j["per_class"] = nlohmann::json::array();
    for (const auto& m : report.per_class) j["per_class"].push_back(metrics_json(m));
    j["macro_avg"] = metrics_json(report.macro_avg);
    j["weighted_avg"] = metrics_json(report.weighted_avg);
    return j.dump(2);
}

std::string report_to_text(const MetricsReport& report) {
    std::ostringstream os;
    char line[160];
    os << "Class        Precision  Recall     F1-score   Support\n";
    for (std::size_t k = 0; k < report.per_class.size(); ++k) {
        const auto& m = report.per_class[k];
        std::snprintf(line, sizeof line, "%-12zu %-10.2f %-10.2f %-10.2f %d%s\n", k, m.precision,
                      m.recall, m.f1, m.support, m.flagged ? "  (flagged: zero denominator)" : "");
        os << line;
    }
    std::snprintf(line, sizeof line, "Overall Accuracy  %.2f%%\n", 100.0 * report.accuracy);
    os << line;
    std::snprintf(line, sizeof line, "Macro Avg    %-10.2f %-10.2f %-10.2f %d\n",
                  report.macro_avg.precision, report.macro_avg.recall, report.macro_avg.f1,
                  report.macro_avg.support);
    os << line;
    std::snprintf(line, sizeof line, "Weighted Avg %-10.2f %-10.2f %-10.2f %d\n",
                  report.weighted_avg.precision, report.weighted_avg.recall, report.weighted_avg.f1,
                  report.weighted_avg.support);
    os << line;
    return os.str();
}

double jaccard_at(const Tensor<float>& attention, const Tensor<float>& mask, double tau, bool* flagged) {
    if (!attention.same_shape(mask))
        throw std::invalid_argument("jaccard: attention " + shape_str(attention.shape) + " vs mask " +
                                    shape_str(mask.shape));
    if (tau <= 0.0 || tau >= 1.0) throw std::invalid_argument("jaccard: tau must lie in (0,1)");
    if (flagged) *flagged = false;

    float mx = 0;
    for (float v : attention.data) mx = std::max(mx, v);
    const float cut = static_cast<float>(tau) * mx;

    std::int64_t inter = 0, uni = 0;
    for (std::size_t i = 0; i < attention.data.size(); ++i) {
        const bool a = attention.data[i] >= cut && mx > 0;
        const bool m = mask.data[i] != 0.0f;
        inter += (a && m) ? 1 : 0;
        uni += (a || m) ? 1 : 0;
    }
    if (uni == 0) {
        if (flagged) *flagged = true;
        return 1.0;  // both agree that nothing is there
    }
    return static_cast<double>(inter) / static_cast<double>(uni);
}

namespace {

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

}  // namespace

WilcoxonResult wilcoxon_signed_rank(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size()) throw std::invalid_argument("wilcoxon: paired inputs must match in length");

    std::vector<double> diff;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        if (d != 0.0) diff.push_back(d);
    }

    WilcoxonResult res;
    res.n = static_cast<int>(diff.size());
    if (diff.empty()) {
        res.flagged = true;
        res.exact = true;
        return res;  // W = 0, p = 1
    }

    // average ranks over tied |d|
    const int n = res.n;
    std::vector<int> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&diff](int i, int j) { return std::abs(diff[static_cast<std::size_t>(i)]) < std::abs(diff[static_cast<std::size_t>(j)]); });
    std::vector<double> rank(static_cast<std::size_t>(n), 0.0);
    double tie_correction = 0;
    for (int i = 0; i < n;) {
        int j = i;
        while (j < n && std::abs(diff[static_cast<std::size_t>(order[static_cast<std::size_t>(j)])]) ==
                            std::abs(diff[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])]))
            ++j;
        const double avg = (i + 1 + j) / 2.0;  // mean of ranks i+1..j
        for (int k = i; k < j; ++k) rank[static_cast<std::size_t>(order[static_cast<std::size_t>(k)])] = avg;
        const double t = j - i;
        tie_correction += (t * t * t - t);
        i = j;
    }

    double w_plus = 0;
    for (int i = 0; i < n; ++i)
        if (diff[static_cast<std::size_t>(i)] > 0) w_plus += rank[static_cast<std::size_t>(i)];
    const double total = n * (n + 1) / 2.0;
    const double w_minus = total - w_plus;
    res.statistic = std::min(w_plus, w_minus);

    if (n <= 20) {
        // exact: every sign assignment is equally likely under H0
        res.exact = true;
        const std::uint64_t count = std::uint64_t(1) << n;
        std::uint64_t le = 0, ge = 0;
        const double eps = 1e-9;
        double t_enum = 0;  // W+ of the current assignment, updated Gray-code style
        std::uint64_t bits = 0;
        // assignment 0 has all signs negative: W+ = 0
        if (t_enum <= w_plus + eps) ++le;
        if (t_enum >= w_plus - eps) ++ge;
        for (std::uint64_t g = 1; g < count; ++g) {
            const int flip = std::countr_zero(g);  // Gray code bit change
            const std::uint64_t mask = std::uint64_t(1) << flip;
            bits ^= mask;
            t_enum += (bits & mask) ? rank[static_cast<std::size_t>(flip)] : -rank[static_cast<std::size_t>(flip)];
            if (t_enum <= w_plus + eps) ++le;
            if (t_enum >= w_plus - eps) ++ge;
        }
        const double p_le = static_cast<double>(le) / static_cast<double>(count);
        const double p_ge = static_cast<double>(ge) / static_cast<double>(count);
        res.p_value = std::min(1.0, 2.0 * std::min(p_le, p_ge));
    } else {
        const double mean = total / 2.0;
        double var = n * (n + 1.0) * (2.0 * n + 1.0) / 24.0 - tie_correction / 48.0;
        if (var <= 0) {
            res.p_value = 1.0;
            res.flagged = true;
            return res;
        }
        // continuity correction toward the mean
        double z = w_plus - mean;
        z -= z > 0 ? 0.5 : (z < 0 ? -0.5 : 0.0);
        z /= std::sqrt(var);
        res.p_value = std::min(1.0, 2.0 * (1.0 - normal_cdf(std::abs(z))));
    }
    return res;
}

std::vector<ComparisonRow> compare_models(Model<float>& model_a, Model<float>& model_b,
                                          const Dataset& dataset, const std::vector<double>& thresholds) {
    const auto test_idx = dataset.indices(Split::test);
    if (test_idx.empty()) throw std::invalid_argument("compare: test split is empty");

    // tumor-bearing samples only: empty masks would be dominated by the
    // empty-union convention
    std::vector<std::size_t> tumor_idx;
    for (std::size_t i : test_idx) {
        const auto& m = dataset.samples[i].mask.data;
        if (std::any_of(m.begin(), m.end(), [](float v) { return v != 0.0f; })) tumor_idx.push_back(i);
    }
    if (tumor_idx.empty()) throw std::invalid_argument("compare: no tumor-bearing test samples with masks");

    model_a.set_training(false);
    model_b.set_training(false);

    // one forward per model per sample, attention maps cached
    std::vector<Tensor<float>> maps_a, maps_b;
    const int S = dataset.image_size;
    for (std::size_t i : tumor_idx) {
        Tensor<float> img = dataset.samples[i].image.reshaped({1, 1, S, S});
        maps_a.push_back(model_a.forward(img).attention);
        maps_b.push_back(model_b.forward(img).attention);
    }

    std::vector<ComparisonRow> rows;
    for (double tau : thresholds) {
        ComparisonRow row;
        row.tau = tau;
        std::vector<double> scores_a, scores_b;
        for (std::size_t s = 0; s < tumor_idx.size(); ++s) {
            const Tensor<float>& mask = dataset.samples[tumor_idx[s]].mask;
            scores_a.push_back(jaccard_at(maps_a[s].reshaped(mask.shape), mask, tau));
            scores_b.push_back(jaccard_at(maps_b[s].reshaped(mask.shape), mask, tau));
        }
        row.mean_a = std::accumulate(scores_a.begin(), scores_a.end(), 0.0) / scores_a.size();
        row.mean_b = std::accumulate(scores_b.begin(), scores_b.end(), 0.0) / scores_b.size();
        WilcoxonResult w = wilcoxon_signed_rank(scores_a, scores_b);
        row.statistic = w.statistic;
        row.p_value = w.p_value;
        row.flagged = w.flagged;
        rows.push_back(row);
    }
    return rows;
}

std::string comparison_to_text(const std::vector<ComparisonRow>& rows, const std::string& name_a,
                               const std::string& name_b) {
    std::ostringstream os;
    char line[192];
    std::snprintf(line, sizeof line, "%-14s %-14s %-14s %-24s %-10s\n", "Threshold", name_a.c_str(),
                  name_b.c_str(), "Wilcoxon Test Statistic", "p-value");
    os << line;
    os << "(Jaccard on tumor-bearing test samples only)\n";
    for (const auto& r : rows) {
        std::snprintf(line, sizeof line, "%-14.2f %-14.5f %-14.5f %-24.1f %.4f%s\n", r.tau, r.mean_a,
                      r.mean_b, r.statistic, r.p_value, r.flagged ? "  (flagged)" : "");
        os << line;
    }
    return os.str();
}

EmbeddingLayer embedding_layer_from_name(const std::string& name) {
    if (name == "quantum_out") return EmbeddingLayer::quantum_out;
    if (name == "pre_head") return EmbeddingLayer::pre_head;
    throw std::invalid_argument("unknown embedding layer '" + name +
                                "' (expected quantum_out or pre_head)");
}

void export_embeddings(Model<float>& model, const Dataset& dataset, Split split, EmbeddingLayer layer,
                       const std::string& path) {
    const auto idx = dataset.indices(split);
    if (idx.empty()) throw std::invalid_argument("embeddings: split '" + split_name(split) + "' is empty");

    std::ofstream os(path, std::ios::trunc);
    if (!os) throw std::runtime_error("embeddings: cannot write '" + path + "'");

    model.set_training(false);
    const int S = dataset.image_size;
    const int width = layer == EmbeddingLayer::quantum_out ? model.config().quantum.output_width()
                                                           : model.config().quantum.input_width();
    os << "sample_id,label";
    for (int i = 1; i <= width; ++i) os << ",v" << i;
    os << "\n";

    for (std::size_t i : idx) {
        Tensor<float> img = dataset.samples[i].image.reshaped({1, 1, S, S});
        ForwardResult<float> fwd = model.forward(img);
        const Tensor<float>& vec = layer == EmbeddingLayer::quantum_out ? fwd.quantum_out : fwd.pre_head;
        os << i << "," << dataset.samples[i].label;
        char buf[32];
        for (int k = 0; k < width; ++k) {
            std::snprintf(buf, sizeof buf, ",%.9g", static_cast<double>(vec.at(0, k)));
            os << buf;
        }
        os << "\n";
    }
}

}  // namespace hqcm
