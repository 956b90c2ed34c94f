#include "pairfuse/eval.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

#include "json.hpp"

namespace pairfuse {

using nlohmann::json;

std::string to_string(TestVariant v) {
    switch (v) {
        case TestVariant::test_c: return "test_c";
        case TestVariant::test_f: return "test_f";
        case TestVariant::test_i: return "test_i";
    }
    return "?";
}

TestVariant test_variant_from_string(const std::string& s) {
    if (s == "test_c") return TestVariant::test_c;
    if (s == "test_f") return TestVariant::test_f;
    if (s == "test_i") return TestVariant::test_i;
    throw std::invalid_argument("unknown test variant: " + s);
}

ConfusionMatrix::ConfusionMatrix(std::vector<std::string> cls) : classes(std::move(cls)) {
    counts.assign(classes.size(), std::vector<long long>(classes.size(), 0));
}

long long ConfusionMatrix::total() const {
    long long t = 0;
    for (const auto& row : counts)
        for (long long v : row) t += v;
    return t;
}

std::vector<Sample> make_test_variant(const std::vector<Sample>& samples, TestVariant variant) {
    if (variant == TestVariant::test_c) return samples;
    std::vector<Sample> out;
    out.reserve(samples.size());
    const Modality to_black = variant == TestVariant::test_f ? Modality::interior : Modality::facade;
    for (const auto& s : samples) out.push_back(blackened(s, to_black));
    return out;
}

MetricsReport macro_f1(const ConfusionMatrix& confusion) {
    const int n = confusion.num_classes();
    if (n < 2) throw std::invalid_argument("macro_f1 requires at least 2 classes");

    MetricsReport report;
    report.confusion = confusion;
    report.per_class_f1.resize(n);
    double sum = 0.0;
    for (int i = 0; i < n; ++i) {
        long long tp = confusion.counts[i][i];
        long long fp = 0, fn = 0;
        for (int r = 0; r < n; ++r) {
            if (r == i) continue;
            fp += confusion.counts[r][i];
            fn += confusion.counts[i][r];
        }
        const double precision = tp + fp == 0 ? 0.0 : static_cast<double>(tp) / (tp + fp);
        const double recall = tp + fn == 0 ? 0.0 : static_cast<double>(tp) / (tp + fn);
        const double f1 = precision + recall == 0.0 ? 0.0 : 2.0 * precision * recall / (precision + recall);
        report.per_class_f1[i] = f1;
        sum += f1;
    }
    report.macro_f1 = sum / n;
    return report;
}

MetricsReport evaluate(const FusionModel& model, const std::vector<Sample>& samples,
                       TestVariant variant, const std::vector<std::string>* dataset_classes) {
    if (samples.empty()) throw std::invalid_argument("evaluate: empty sample list");
    if (dataset_classes && !model.class_names.empty() && *dataset_classes != model.class_names)
        throw std::invalid_argument("evaluate: dataset vocabulary does not match the model's");
    for (const auto& s : samples) {
        if (s.label_index < 0 || s.label_index >= model.num_classes)
            throw std::invalid_argument("evaluate: sample label outside the model's vocabulary");
    }

    std::vector<std::string> vocab = model.class_names;
    if (vocab.empty()) {
        for (int i = 0; i < model.num_classes; ++i) vocab.push_back("class" + std::to_string(i));
    }
    const std::vector<Sample> variant_samples = make_test_variant(samples, variant);
    ConfusionMatrix confusion(vocab);
    std::vector<int> predictions;
    predictions.reserve(variant_samples.size());
    for (const auto& s : variant_samples) {
        const Prediction p = predict(model, s.facade, s.interior);
        confusion.add(s.label_index, p.predicted_class);
        predictions.push_back(p.predicted_class);
    }
    MetricsReport report = macro_f1(confusion);
    report.variant = variant;
    return report;
}

Aggregate aggregate_runs(const std::vector<double>& scores) {
    if (scores.empty()) throw std::invalid_argument("aggregate_runs: no scores");
    Aggregate a;
    for (double s : scores) a.mean += s;
    a.mean /= static_cast<double>(scores.size());
    double var = 0.0;
    for (double s : scores) var += (s - a.mean) * (s - a.mean);
    var /= static_cast<double>(scores.size());
    a.stddev = std::sqrt(var);
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.2f (%.2f)", a.mean, a.stddev);
    a.formatted = buf;
    return a;
}

void export_confusion_grid(const ConfusionMatrix& confusion, const std::vector<Sample>& samples,
                           const std::vector<int>& predictions, const std::string& path) {
    if (samples.size() != predictions.size())
        throw std::invalid_argument("export_confusion_grid: samples/predictions size mismatch");

    const int n = confusion.num_classes();
    // First sample that lands in each cell is the representative.
    std::vector<std::vector<int>> rep(n, std::vector<int>(n, -1));
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const int t = samples[i].label_index;
        const int p = predictions[i];
        if (rep[t][p] < 0) rep[t][p] = static_cast<int>(i);
    }

    json j;
    j["classes"] = confusion.classes;
    j["counts"] = confusion.counts;
    json cells = json::array();
    for (int t = 0; t < n; ++t)
        for (int p = 0; p < n; ++p) {
            if (confusion.counts[t][p] == 0) continue;  // empty cells are omitted
            json cell;
            cell["true_class"] = confusion.classes[t];
            cell["predicted_class"] = confusion.classes[p];
            cell["count"] = confusion.counts[t][p];
            if (rep[t][p] >= 0) {
                const Sample& s = samples[rep[t][p]];
                cell["example"] = {{"object_id", s.object_id},
                                   {"facade", s.facade_ref},
                                   {"interior", s.interior_ref}};
            }
            cells.push_back(std::move(cell));
        }
    j["cells"] = std::move(cells);

    std::ofstream out(path, std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open confusion grid for writing: " + path);
    out << j.dump(2) << "\n";
}

}  // namespace pairfuse
