#include "lgenet/metrics.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace lgenet {

EvaluationReport evaluate(const ConfusionMatrix& m) {
    const int C = m.num_classes;
    check(C > 0 && m.total() > 0, "evaluate: confusion matrix is empty");
    EvaluationReport rep;
    rep.per_class.resize(static_cast<size_t>(C));
    int64_t trace = 0;
    double f1_sum = 0.0;
    int f1_count = 0;
    for (int c = 0; c < C; ++c) {
        int64_t row = 0, col = 0;
        for (int j = 0; j < C; ++j) {
            row += m.at(c, j);
            col += m.at(j, c);
        }
        const int64_t tp = m.at(c, c);
        trace += tp;
        ClassMetrics& cm = rep.per_class[static_cast<size_t>(c)];
        if (row == 0 && col == 0) {
            cm.defined = false;
            ++rep.undefined_classes;
            continue;
        }
        cm.precision = col > 0 ? static_cast<double>(tp) / static_cast<double>(col) : 0.0;
        cm.recall = row > 0 ? static_cast<double>(tp) / static_cast<double>(row) : 0.0;
        cm.f1 = (cm.precision + cm.recall) > 0.0
                    ? 2.0 * cm.precision * cm.recall / (cm.precision + cm.recall)
                    : 0.0;
        f1_sum += cm.f1;
        ++f1_count;
    }
    if (rep.undefined_classes > 0)
        std::fprintf(stderr,
                     "[lgenet] warning: %d class(es) with zero support excluded from the "
                     "average F1\n",
                     rep.undefined_classes);
    rep.overall_accuracy = static_cast<double>(trace) / static_cast<double>(m.total());
    rep.average_f1 = f1_count > 0 ? f1_sum / f1_count : 0.0;
    return rep;
}

ConfusionMatrix confusion_from_labels(const std::vector<int32_t>& truth,
                                      const std::vector<int32_t>& pred, int num_classes) {
    check(truth.size() == pred.size(), "confusion: label vectors differ in length");
    ConfusionMatrix m(num_classes);
    for (size_t i = 0; i < truth.size(); ++i) {
        if (truth[i] == 255) continue;  // unlabeled points are excluded
        m.add(truth[i], pred[i]);
    }
    return m;
}

std::string EvaluationReport::table(const std::vector<std::string>& class_names) const {
    std::ostringstream os;
    char buf[160];
    std::snprintf(buf, sizeof buf, "%-14s %10s %10s %10s\n", "class", "precision", "recall",
                  "F1");
    os << buf;
    for (size_t c = 0; c < per_class.size(); ++c) {
        const std::string name =
            c < class_names.size() ? class_names[c] : "class" + std::to_string(c);
        const ClassMetrics& cm = per_class[c];
        if (!cm.defined) {
            std::snprintf(buf, sizeof buf, "%-14s %10s %10s %10s\n", name.c_str(), "undef",
                          "undef", "undef");
        } else {
            std::snprintf(buf, sizeof buf, "%-14s %10.4f %10.4f %10.4f\n", name.c_str(),
                          cm.precision, cm.recall, cm.f1);
        }
        os << buf;
    }
    std::snprintf(buf, sizeof buf, "overall accuracy %.4f\naverage F1       %.4f\n",
                  overall_accuracy, average_f1);
    os << buf;
    return os.str();
}

std::string EvaluationReport::machine_lines(
    const std::vector<std::string>& class_names) const {
    std::ostringstream os;
    char buf[200];
    for (size_t c = 0; c < per_class.size(); ++c) {
        const std::string name =
            c < class_names.size() ? class_names[c] : "class" + std::to_string(c);
        const ClassMetrics& cm = per_class[c];
        if (!cm.defined) {
            os << "class." << name << ".defined=0\n";
            continue;
        }
        std::snprintf(buf, sizeof buf,
                      "class.%s.precision=%.6f\nclass.%s.recall=%.6f\nclass.%s.f1=%.6f\n",
                      name.c_str(), cm.precision, name.c_str(), cm.recall, name.c_str(),
                      cm.f1);
        os << buf;
    }
    std::snprintf(buf, sizeof buf, "overall_accuracy=%.6f\naverage_f1=%.6f\n",
                  overall_accuracy, average_f1);
    os << buf;
    return os.str();
}

NamedConfusion read_confusion(const std::string& path) {
    std::ifstream in(path);
    check(static_cast<bool>(in), path + ": cannot open confusion matrix");
    NamedConfusion nc;
    std::string header;
    check(static_cast<bool>(std::getline(in, header)), path + ": empty confusion file");
    std::istringstream hs(header);
    std::string name;
    while (hs >> name) nc.class_names.push_back(name);
    const int C = static_cast<int>(nc.class_names.size());
    check(C >= 2, path + ": confusion header needs at least 2 class names");
    nc.matrix = ConfusionMatrix(C);
    for (int r = 0; r < C; ++r) {
        for (int c = 0; c < C; ++c) {
            int64_t v;
            check(static_cast<bool>(in >> v),
                  path + ": expected " + std::to_string(C) + "x" + std::to_string(C) +
                      " integer entries");
            check(v >= 0, path + ": negative count");
            nc.matrix.at(r, c) = v;
        }
    }
    return nc;
}

void write_confusion(const NamedConfusion& nc, const std::string& path) {
    std::ofstream out(path);
    check(static_cast<bool>(out), path + ": cannot write confusion matrix");
    for (size_t c = 0; c < nc.class_names.size(); ++c)
        out << (c ? " " : "") << nc.class_names[c];
    out << '\n';
    const int C = nc.matrix.num_classes;
    for (int r = 0; r < C; ++r) {
        for (int c = 0; c < C; ++c) out << (c ? " " : "") << nc.matrix.at(r, c);
        out << '\n';
    }
}

}  // namespace lgenet
