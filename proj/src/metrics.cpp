#include "mmsc/metrics.hpp"

#include <cstdio>

#include "mmsc/error.hpp"

namespace mmsc {

int64_t ConfusionMatrix::total() const {
    int64_t sum = 0;
    for (int64_t c : cells_) sum += c;
    return sum;
}

int64_t ConfusionMatrix::diagonal() const {
    int64_t sum = 0;
    for (MICode code : kAllCodes) sum += at(code, code);
    return sum;
}

ConfusionMatrix confusion(std::span<const MICode> gold, std::span<const MICode> pred) {
    if (gold.size() != pred.size()) {
        raise(ErrorCode::LengthMismatch,
              std::to_string(gold.size()) + " gold labels vs " + std::to_string(pred.size()) +
                  " predictions");
    }
    ConfusionMatrix cm;
    for (size_t i = 0; i < gold.size(); ++i) {
        cm.add(gold[i], pred[i]);
    }
    return cm;
}

MetricsReport metrics(const ConfusionMatrix& cm) {
    MetricsReport report;
    report.n = cm.total();
    report.accuracy =
        report.n == 0 ? 0.0 : static_cast<double>(cm.diagonal()) / static_cast<double>(report.n);

    auto ratio = [](int64_t num, int64_t den) {
        return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
    };

    for (MICode code : kAllCodes) {
        const int64_t tp = cm.at(code, code);
        int64_t fp = 0;
        int64_t fn = 0;
        for (MICode other : kAllCodes) {
            if (other == code) continue;
            fp += cm.at(other, code);
            fn += cm.at(code, other);
        }
        ClassMetrics& c = report.per_class[static_cast<size_t>(code)];
        c.precision = ratio(tp, tp + fp);
        c.recall = ratio(tp, tp + fn);
        c.f1 = c.precision + c.recall == 0.0
                   ? 0.0
                   : 2.0 * c.precision * c.recall / (c.precision + c.recall);
        report.macro_precision += c.precision;
        report.macro_recall += c.recall;
        report.macro_f1 += c.f1;
    }
    report.macro_precision /= 3.0;
    report.macro_recall /= 3.0;
    report.macro_f1 /= 3.0;
    return report;
}

std::string format_pct(double fraction) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f", fraction * 100.0);
    return buf;
}

} // namespace mmsc
