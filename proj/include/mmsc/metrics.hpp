#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>

#include "mmsc/types.hpp"

namespace mmsc {

// 3x3 counts, rows = gold code, columns = predicted code.
class ConfusionMatrix {
public:
    int64_t& at(MICode gold, MICode pred) {
        return cells_[static_cast<size_t>(gold) * 3 + static_cast<size_t>(pred)];
    }
    int64_t at(MICode gold, MICode pred) const {
        return cells_[static_cast<size_t>(gold) * 3 + static_cast<size_t>(pred)];
    }

    void add(MICode gold, MICode pred) { ++at(gold, pred); }

    int64_t total() const;
    int64_t diagonal() const;

    bool operator==(const ConfusionMatrix&) const = default;

private:
    std::array<int64_t, 9> cells_{};
};

// Throws LengthMismatch when the two sequences differ in length.
ConfusionMatrix confusion(std::span<const MICode> gold, std::span<const MICode> pred);

struct ClassMetrics {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
};

struct MetricsReport {
    double accuracy = 0.0;
    std::array<ClassMetrics, 3> per_class{}; // indexed by MICode order CT, ST, FN
    double macro_precision = 0.0;
    double macro_recall = 0.0;
    double macro_f1 = 0.0;
    int64_t n = 0;
    int64_t unresolved_mapped = 0; // filled by the caller that did the mapping

    const ClassMetrics& for_code(MICode code) const {
        return per_class[static_cast<size_t>(code)];
    }
};

// accuracy = diagonal/total; precision = tp/(tp+fp), recall = tp/(tp+fn),
// f1 = 2PR/(P+R), each 0 when its denominator is 0; macros are unweighted
// means over the three classes.
MetricsReport metrics(const ConfusionMatrix& cm);

// Fraction as a percentage with two decimals: 0.5256 -> "52.56".
std::string format_pct(double fraction);

} // namespace mmsc
