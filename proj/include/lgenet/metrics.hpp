#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "lgenet/tensor.hpp"

namespace lgenet {

// C x C counts; rows are ground truth, columns are predictions.
struct ConfusionMatrix {
    int num_classes = 0;
    std::vector<int64_t> counts;  // row-major C x C

    explicit ConfusionMatrix(int c = 0)
        : num_classes(c), counts(static_cast<size_t>(c) * static_cast<size_t>(c), 0) {}

    int64_t& at(int truth, int pred) {
        return counts[static_cast<size_t>(truth) * static_cast<size_t>(num_classes) +
                      static_cast<size_t>(pred)];
    }
    int64_t at(int truth, int pred) const {
        return counts[static_cast<size_t>(truth) * static_cast<size_t>(num_classes) +
                      static_cast<size_t>(pred)];
    }

    void add(int32_t truth, int32_t pred) {
        check(truth >= 0 && truth < num_classes && pred >= 0 && pred < num_classes,
              "confusion matrix: class id out of range");
        ++at(truth, pred);
    }

    int64_t total() const {
        int64_t t = 0;
        for (int64_t c : counts) t += c;
        return t;
    }
};

struct ClassMetrics {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    bool defined = true;  // false when the class never appears at all
};

struct EvaluationReport {
    std::vector<ClassMetrics> per_class;
    double overall_accuracy = 0.0;
    double average_f1 = 0.0;  // unweighted mean over defined classes
    int undefined_classes = 0;

    std::string table(const std::vector<std::string>& class_names) const;
    std::string machine_lines(const std::vector<std::string>& class_names) const;
};

// precision_c = TP/(TP+FP) down column c, recall_c = TP/(TP+FN) along row c,
// F1 the harmonic mean, OA = trace/total. Classes with no ground-truth and no
// predicted points are reported undefined and excluded from the average.
EvaluationReport evaluate(const ConfusionMatrix& m);

ConfusionMatrix confusion_from_labels(const std::vector<int32_t>& truth,
                                      const std::vector<int32_t>& pred, int num_classes);

// Confusion-matrix text file: a header row of C class names, then C rows of
// C integers (ground truth in rows).
struct NamedConfusion {
    std::vector<std::string> class_names;
    ConfusionMatrix matrix;
};
NamedConfusion read_confusion(const std::string& path);
void write_confusion(const NamedConfusion& nc, const std::string& path);

}  // namespace lgenet
