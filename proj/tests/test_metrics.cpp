#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>

#include "hqcm/data.hpp"
#include "hqcm/metrics.hpp"
#include "hqcm/model.hpp"
#include "hqcm/rng.hpp"

using namespace hqcm;
namespace fs = std::filesystem;

namespace {

// Brute-force counting oracle for the classification report.
struct CountingOracle {
    double precision, recall, accuracy;
};

CountingOracle count_class(const std::vector<int>& pred, const std::vector<int>& label, int K, int k) {
    int tp = 0, fp = 0, fn = 0, correct = 0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        if (pred[i] == label[i]) ++correct;
        if (pred[i] == k && label[i] == k) ++tp;
        if (pred[i] == k && label[i] != k) ++fp;
        if (pred[i] != k && label[i] == k) ++fn;
    }
    CountingOracle o{};
    o.precision = (tp + fp) ? static_cast<double>(tp) / (tp + fp) : 0.0;
    o.recall = (tp + fn) ? static_cast<double>(tp) / (tp + fn) : 0.0;
    o.accuracy = static_cast<double>(correct) / pred.size();
    (void)K;
    return o;
}

// Independent exact Wilcoxon oracle: builds average ranks from scratch and
// walks every sign assignment by index, recomputing W+ in full each time
// for n <= 14 and via an incremental walk above that.
double wilcoxon_oracle_p(const std::vector<double>& a, const std::vector<double>& b) {
    std::vector<double> diff;
    for (std::size_t i = 0; i < a.size(); ++i)
        if (a[i] != b[i]) diff.push_back(a[i] - b[i]);
    const int n = static_cast<int>(diff.size());
    if (n == 0) return 1.0;

    std::vector<double> mag;
    for (double d : diff) mag.push_back(std::abs(d));
    std::vector<double> ranks(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        int less = 0, equal = 0;
        for (int j = 0; j < n; ++j) {
            if (mag[static_cast<std::size_t>(j)] < mag[static_cast<std::size_t>(i)]) ++less;
            if (mag[static_cast<std::size_t>(j)] == mag[static_cast<std::size_t>(i)]) ++equal;
        }
        // ranks less+1 .. less+equal averaged
        ranks[static_cast<std::size_t>(i)] = less + (equal + 1) / 2.0;
    }
    double w_plus = 0;
    for (int i = 0; i < n; ++i)
        if (diff[static_cast<std::size_t>(i)] > 0) w_plus += ranks[static_cast<std::size_t>(i)];

    const std::uint64_t total = std::uint64_t(1) << n;
    std::uint64_t le = 0, ge = 0;
    for (std::uint64_t m = 0; m < total; ++m) {
        double t = 0;
        for (int i = 0; i < n; ++i)
            if (m & (std::uint64_t(1) << i)) t += ranks[static_cast<std::size_t>(i)];
        if (t <= w_plus) ++le;
        if (t >= w_plus) ++ge;
    }
    const double p =
        2.0 * std::min(static_cast<double>(le) / total, static_cast<double>(ge) / total);
    return std::min(1.0, p);
}

Tensor<float> tensor_from(std::vector<int> shape, std::vector<float> data) {
    return Tensor<float>(std::move(shape), std::move(data));
}

}  // namespace

TEST_CASE("classification report: perfect predictions") {
    auto rep = classification_report({0, 1, 2, 3}, {0, 1, 2, 3}, 4);
    CHECK(rep.accuracy == 1.0);
    for (int k = 0; k < 4; ++k) {
        CHECK(rep.per_class[static_cast<std::size_t>(k)].precision == 1.0);
        CHECK(rep.per_class[static_cast<std::size_t>(k)].recall == 1.0);
        CHECK(rep.per_class[static_cast<std::size_t>(k)].f1 == 1.0);
        CHECK(rep.confusion[static_cast<std::size_t>(k)][static_cast<std::size_t>(k)] == 1);
    }
    CHECK(rep.macro_avg.f1 == 1.0);
    CHECK(rep.weighted_avg.f1 == 1.0);
}

TEST_CASE("classification report: collapsed predictor on balanced labels") {
    std::vector<int> labels, preds;
    for (int k = 0; k < 4; ++k)
        for (int i = 0; i < 5; ++i) {
            labels.push_back(k);
            preds.push_back(0);
        }
    auto rep = classification_report(preds, labels, 4);
    CHECK(rep.accuracy == doctest::Approx(0.25));
    CHECK(rep.per_class[0].recall == 1.0);
    CHECK(rep.per_class[0].precision == doctest::Approx(0.25));
    for (int k = 1; k < 4; ++k) {
        CHECK(rep.per_class[static_cast<std::size_t>(k)].flagged);
        CHECK(rep.per_class[static_cast<std::size_t>(k)].precision == 0.0);
        CHECK(rep.per_class[static_cast<std::size_t>(k)].recall == 0.0);
    }
}

TEST_CASE("classification report matches the counting oracle on random instances") {
    Pcg32 rng(1, 0);
    for (int trial = 0; trial < 100; ++trial) {
        const int K = 2 + static_cast<int>(rng.next_below(4));
        const int n = 50;
        std::vector<int> labels, preds;
        for (int i = 0; i < n; ++i) {
            labels.push_back(static_cast<int>(rng.next_below(static_cast<std::uint32_t>(K))));
            preds.push_back(static_cast<int>(rng.next_below(static_cast<std::uint32_t>(K))));
        }
        auto rep = classification_report(preds, labels, K);
        int trace = 0;
        for (int k = 0; k < K; ++k) {
            auto oracle = count_class(preds, labels, K, k);
            CHECK(rep.per_class[static_cast<std::size_t>(k)].precision == doctest::Approx(oracle.precision));
            CHECK(rep.per_class[static_cast<std::size_t>(k)].recall == doctest::Approx(oracle.recall));
            CHECK(rep.accuracy == doctest::Approx(oracle.accuracy));
            trace += rep.confusion[static_cast<std::size_t>(k)][static_cast<std::size_t>(k)];
        }
        // accuracy recomputed from the matrix equals the reported accuracy
        CHECK(rep.accuracy == static_cast<double>(trace) / n);
        int total = 0;
        for (const auto& row : rep.confusion)
            for (int v : row) total += v;
        CHECK(total == n);
    }
    CHECK_THROWS_AS(classification_report({}, {}, 3), std::invalid_argument);
}

TEST_CASE("report serialization carries every published field") {
    auto rep = classification_report({0, 1, 1, 0}, {0, 1, 0, 0}, 2);
    const std::string json = report_to_json(rep);
    for (const char* key : {"overall_accuracy", "per_class", "macro_avg", "weighted_avg",
                            "confusion_matrix", "precision", "recall", "f1", "support"})
        CHECK(json.find(key) != std::string::npos);
    const std::string text = report_to_text(rep);
    CHECK(text.find("Overall Accuracy") != std::string::npos);
    CHECK(text.find("Macro Avg") != std::string::npos);
    CHECK(text.find("Weighted Avg") != std::string::npos);
}

TEST_CASE("jaccard at a relative threshold") {
    SUBCASE("binarized map equal to the mask scores 1") {
        auto attn = tensor_from({1, 1, 2, 2}, {0.9f, 0.1f, 0.9f, 0.1f});
        auto mask = tensor_from({1, 1, 2, 2}, {1, 0, 1, 0});
        CHECK(jaccard_at(attn, mask, 0.5) == 1.0);
    }
    SUBCASE("disjoint non-empty sets score 0") {
        auto attn = tensor_from({1, 1, 2, 2}, {0.9f, 0.9f, 0.1f, 0.1f});
        auto mask = tensor_from({1, 1, 2, 2}, {0, 0, 1, 1});
        CHECK(jaccard_at(attn, mask, 0.5) == 0.0);
    }
    SUBCASE("overlap of one pixel out of seven") {
        // 4x4, attention top-left 2x2 at max, mask 2x2 shifted to overlap once
        Tensor<float> attn({1, 1, 4, 4});
        attn.data[0] = attn.data[1] = attn.data[4] = attn.data[5] = 1.0f;
        Tensor<float> mask({1, 1, 4, 4});
        mask.data[5] = mask.data[6] = mask.data[9] = mask.data[10] = 1.0f;
        CHECK(jaccard_at(attn, mask, 0.9) == doctest::Approx(1.0 / 7.0));
    }
    SUBCASE("empty union flags and scores 1") {
        Tensor<float> attn({1, 1, 2, 2});  // all zero -> thresholded set empty
        Tensor<float> mask({1, 1, 2, 2});
        bool flagged = false;
        CHECK(jaccard_at(attn, mask, 0.5, &flagged) == 1.0);
        CHECK(flagged);
    }
    SUBCASE("tau outside (0,1) rejected; shapes must match") {
        Tensor<float> t({1, 1, 2, 2});
        CHECK_THROWS_AS(jaccard_at(t, t, 0.0), std::invalid_argument);
        CHECK_THROWS_AS(jaccard_at(t, Tensor<float>({1, 1, 3, 3}), 0.5), std::invalid_argument);
    }
    SUBCASE("raising tau never grows the binarized set") {
        Pcg32 rng(2, 0);
        Tensor<float> attn({1, 1, 8, 8});
        for (auto& v : attn.data) v = static_cast<float>(rng.next_double());
        float mx = 0;
        for (float v : attn.data) mx = std::max(mx, v);
        int prev = 65;
        for (double tau : {0.1, 0.3, 0.5, 0.7, 0.9, 0.99}) {
            int count = 0;
            for (float v : attn.data)
                if (v >= tau * mx) ++count;
            CHECK(count <= prev);
            prev = count;
        }
    }
    SUBCASE("symmetric in the two binary sets and permutation invariant") {
        Pcg32 rng(3, 0);
        Tensor<float> a({1, 1, 4, 4}), m({1, 1, 4, 4});
        for (auto& v : a.data) v = rng.bernoulli(0.4) ? 1.0f : 0.0f;
        for (auto& v : m.data) v = rng.bernoulli(0.4) ? 1.0f : 0.0f;
        const double ab = jaccard_at(a, m, 0.5);
        const double ba = jaccard_at(m, a, 0.5);
        CHECK(ab == ba);

        std::vector<int> perm(16);
        std::iota(perm.begin(), perm.end(), 0);
        for (int i = 15; i > 0; --i) std::swap(perm[static_cast<std::size_t>(i)], perm[rng.next_below(static_cast<std::uint32_t>(i + 1))]);
        Tensor<float> ap({1, 1, 4, 4}), mp({1, 1, 4, 4});
        for (int i = 0; i < 16; ++i) {
            ap.data[static_cast<std::size_t>(perm[static_cast<std::size_t>(i)])] = a.data[static_cast<std::size_t>(i)];
            mp.data[static_cast<std::size_t>(perm[static_cast<std::size_t>(i)])] = m.data[static_cast<std::size_t>(i)];
        }
        CHECK(jaccard_at(ap, mp, 0.5) == ab);
    }
}

TEST_CASE("wilcoxon: identical inputs flag p = 1") {
    std::vector<double> a = {1, 2, 3};
    auto r = wilcoxon_signed_rank(a, a);
    CHECK(r.flagged);
    CHECK(r.p_value == 1.0);
    CHECK(r.statistic == 0.0);
    CHECK(r.n == 0);
}

TEST_CASE("wilcoxon: n=6 all-positive differences give p = 2/64 exactly") {
    std::vector<double> a = {1, 2, 3, 4, 5, 6};
    std::vector<double> b = {0, 0, 0, 0, 0, 0};
    auto r = wilcoxon_signed_rank(a, b);
    CHECK(r.exact);
    CHECK(r.statistic == 0.0);  // negative rank sum
    CHECK(r.p_value == 0.03125);
}

TEST_CASE("wilcoxon: exact path matches the enumeration oracle for n <= 10") {
    Pcg32 rng(4, 0);
    for (int trial = 0; trial < 50; ++trial) {
        const int n = 2 + static_cast<int>(rng.next_below(9));  // 2..10
        std::vector<double> a, b;
        for (int i = 0; i < n; ++i) {
            a.push_back(rng.uniform(0, 1));
            // force some ties and zero differences into the mix
            if (rng.bernoulli(0.2))
                b.push_back(a.back());
            else if (rng.bernoulli(0.3))
                b.push_back(a.back() + (rng.bernoulli(0.5) ? 0.25 : -0.25));
            else
                b.push_back(rng.uniform(0, 1));
        }
        auto r = wilcoxon_signed_rank(a, b);
        if (r.n == 0) continue;
        CHECK(r.exact);
        CHECK(r.p_value == wilcoxon_oracle_p(a, b));
        CHECK(r.p_value > 0.0);
        CHECK(r.p_value <= 1.0);
    }
}

TEST_CASE("wilcoxon: two-sided p is invariant under swapping the inputs") {
    Pcg32 rng(5, 0);
    for (int n : {8, 30}) {
        std::vector<double> a, b;
        for (int i = 0; i < n; ++i) {
            a.push_back(rng.uniform(0, 1));
            b.push_back(rng.uniform(0, 1));
        }
        auto ab = wilcoxon_signed_rank(a, b);
        auto ba = wilcoxon_signed_rank(b, a);
        CHECK(ab.p_value == ba.p_value);
        CHECK(ab.statistic == ba.statistic);
    }
}

TEST_CASE("wilcoxon: exact and normal paths agree at the crossover") {
    Pcg32 rng(6, 0);
    const int n = 25;
    std::vector<double> a, b;
    for (int i = 0; i < n; ++i) {
        a.push_back(rng.uniform(0, 1));
        b.push_back(rng.uniform(0, 1));
    }
    auto r = wilcoxon_signed_rank(a, b);
    CHECK(!r.exact);

    // full 2^25 enumeration, incremental over a Gray walk
    std::vector<double> diff;
    for (int i = 0; i < n; ++i) diff.push_back(a[static_cast<std::size_t>(i)] - b[static_cast<std::size_t>(i)]);
    std::vector<double> mag;
    for (double d : diff) mag.push_back(std::abs(d));
    std::vector<int> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int i, int j) { return mag[static_cast<std::size_t>(i)] < mag[static_cast<std::size_t>(j)]; });
    std::vector<double> rank(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) rank[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])] = i + 1;  // no ties w.p. 1
    double w_plus = 0;
    for (int i = 0; i < n; ++i)
        if (diff[static_cast<std::size_t>(i)] > 0) w_plus += rank[static_cast<std::size_t>(i)];
    const std::uint64_t count = std::uint64_t(1) << n;
    std::uint64_t le = 0, ge = 0;
    double t = 0;
    std::uint64_t bits = 0;
    if (t <= w_plus) ++le;
    if (t >= w_plus) ++ge;
    for (std::uint64_t g = 1; g < count; ++g) {
        int flip = 0;
        while (!((g >> flip) & 1)) ++flip;
        const std::uint64_t mask = std::uint64_t(1) << flip;
        bits ^= mask;
        t += (bits & mask) ? rank[static_cast<std::size_t>(flip)] : -rank[static_cast<std::size_t>(flip)];
        if (t <= w_plus) ++le;
        if (t >= w_plus) ++ge;
    }
    const double exact_p = std::min(
        1.0, 2.0 * std::min(static_cast<double>(le) / count, static_cast<double>(ge) / count));
    CHECK(std::abs(r.p_value - exact_p) < 0.01);
}

TEST_CASE("compare_models: a model against itself") {
    const auto dir = fs::temp_directory_path() / "hqcm_compare_self";
    fs::remove_all(dir);
    auto summary = generate_synthetic(40, 16, 21, dir.string());
    Dataset ds = load_dataset(summary.manifest_path, 16);

    ModelConfig cfg;
    cfg.input_size = 16;
    cfg.conv_channels = {4, 4, 4};
    cfg.reduction_ratio = 2;
    cfg.quantum = {2, 1, 2};
    Model<float> model(cfg);
    model.init_params(22);

    auto rows = compare_models(model, model, ds);
    REQUIRE(rows.size() == 3);
    CHECK(rows[0].tau == 0.99);
    CHECK(rows[1].tau == 0.90);
    CHECK(rows[2].tau == 0.75);
    for (const auto& row : rows) {
        CHECK(row.mean_a == row.mean_b);
        CHECK(row.p_value == 1.0);
        CHECK(row.flagged);
    }
    const std::string text = comparison_to_text(rows, "A", "B");
    CHECK(text.find("Wilcoxon") != std::string::npos);

    SUBCASE("a dataset whose test split has no masks is rejected") {
        Dataset healthy_only = ds;
        for (auto& s : healthy_only.samples)
            if (s.split == Split::test) s.mask.fill(0.0f);
        CHECK_THROWS_AS(compare_models(model, model, healthy_only), std::invalid_argument);
    }
    fs::remove_all(dir);
}

TEST_CASE("export_embeddings writes the documented CSV") {
    const auto dir = fs::temp_directory_path() / "hqcm_embed_test";
    fs::remove_all(dir);
    auto summary = generate_synthetic(40, 16, 23, dir.string());
    Dataset ds = load_dataset(summary.manifest_path, 16);

    ModelConfig cfg;
    cfg.input_size = 16;
    cfg.conv_channels = {4, 4, 4};
    cfg.reduction_ratio = 2;
    cfg.quantum = {2, 1, 2};
    Model<float> model(cfg);
    model.init_params(24);

    const std::string path = (dir / "emb.csv").string();
    export_embeddings(model, ds, Split::test, EmbeddingLayer::quantum_out, path);

    std::ifstream is(path);
    std::string header;
    std::getline(is, header);
    CHECK(header == "sample_id,label,v1,v2,v3,v4");  // c*q = 4
    int rows = 0;
    std::string line;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        ++rows;
        std::stringstream ss(line);
        std::string field;
        std::getline(ss, field, ',');  // id
        std::getline(ss, field, ',');  // label
        int col = 0;
        while (std::getline(ss, field, ',')) {
            const double v = std::stod(field);
            CHECK(v >= -1.0);
            CHECK(v <= 1.0);
            ++col;
        }
        CHECK(col == 4);
    }
    CHECK(rows == static_cast<int>(ds.indices(Split::test).size()));

    CHECK_THROWS_AS(embedding_layer_from_name("bogus"), std::invalid_argument);
    fs::remove_all(dir);
}
