#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pairfuse/data.hpp"
#include "pairfuse/fusion.hpp"

namespace pairfuse {

enum class TestVariant { test_c, test_f, test_i };

std::string to_string(TestVariant v);
TestVariant test_variant_from_string(const std::string& s);

// Rows are true classes, columns predicted classes.
struct ConfusionMatrix {
    std::vector<std::string> classes;
    std::vector<std::vector<long long>> counts;

    explicit ConfusionMatrix(std::vector<std::string> cls = {});
    void add(int true_class, int predicted_class) { ++counts[true_class][predicted_class]; }
    long long total() const;
    int num_classes() const { return static_cast<int>(classes.size()); }
};

struct MetricsReport {
    TestVariant variant = TestVariant::test_c;
    std::vector<double> per_class_f1;
    double macro_f1 = 0.0;  // unweighted mean of per-class F1
    ConfusionMatrix confusion;
};

// test_c keeps complete pairs, test_f blackens interiors, test_i blackens
// facades. Inputs must be complete pairs.
std::vector<Sample> make_test_variant(const std::vector<Sample>& samples, TestVariant variant);

// Per-class precision/recall/F1 with the 0/0 -> 0 convention; macro F1 is the
// unweighted class mean.
MetricsReport macro_f1(const ConfusionMatrix& confusion);

MetricsReport evaluate(const FusionModel& model, const std::vector<Sample>& samples,
                       TestVariant variant, const std::vector<std::string>* dataset_classes = nullptr);

struct Aggregate {
    double mean = 0.0;
    double stddev = 0.0;  // population standard deviation
    std::string formatted; // "0.54 (0.02)"
};

Aggregate aggregate_runs(const std::vector<double>& scores);

// Confusion matrix plus at most one representative sample's image references
// per non-empty cell, as JSON, for qualitative inspection.
void export_confusion_grid(const ConfusionMatrix& confusion, const std::vector<Sample>& samples,
                           const std::vector<int>& predictions, const std::string& path);

}  // namespace pairfuse
