// Acceptance suite: one test case per criterion, each printing a PASS/FAIL
// line so a full run reads as a checklist.

#include <doctest.h>

#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <random>
#include <set>

#include "fixture.hpp"
#include "mmsc/align.hpp"
#include "mmsc/experiment.hpp"
#include "mmsc/io.hpp"
#include "mmsc/metrics.hpp"
#include "mmsc/votes.hpp"
#include "mmsc/wav.hpp"

using namespace mmsc;
using namespace mmsc::testfix;

namespace {

struct Criterion {
    const char* name;
    bool passed = false;
    std::chrono::steady_clock::time_point started = std::chrono::steady_clock::now();

    double elapsed_s() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    }
    ~Criterion() {
        std::printf("[acceptance] %-28s %s (%.2fs)\n", name, passed ? "PASS" : "FAIL",
                    elapsed_s());
        std::fflush(stdout);
    }
};

struct TempDir {
    std::filesystem::path path;

    TempDir() {
        path = std::filesystem::temp_directory_path() /
               ("mmsc-acc-" + std::to_string(::getpid()) + "-" +
                std::to_string(reinterpret_cast<uintptr_t>(this)));
        std::filesystem::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path, ec);
    }
};

VoteTally tally_of(int ct, int st, int fn, int abstains = 0) {
    VoteTally t;
    t.count(MICode::CT) = ct;
    t.count(MICode::ST) = st;
    t.count(MICode::FN) = fn;
    t.abstains = abstains;
    return t;
}

} // namespace

TEST_CASE("criterion 1: vote aggregation vs brute-force oracle") {
    Criterion crit{"1 vote-aggregation oracle"};

    int checked = 0;
    for (int ct = 0; ct <= 12; ++ct) {
        for (int st = 0; st + ct <= 12; ++st) {
            const int fn = 12 - ct - st;
            // independent oracle: max count, priority CT > ST > FN
            MICode expected = MICode::FN;
            if (st >= fn) expected = MICode::ST;
            if (ct >= st && ct >= fn) expected = MICode::CT;
            const AggregatedPrediction pred = aggregate(tally_of(ct, st, fn));
            REQUIRE(pred.final.has_value());
            REQUIRE(*pred.final == expected);
            ++checked;
        }
    }
    REQUIRE(checked == 91);

    // the two anchored tie cases: directional labels beat FN
    const AggregatedPrediction ct_fn = aggregate(tally_of(6, 0, 6));
    REQUIRE(ct_fn.final == MICode::CT);
    REQUIRE(ct_fn.tie_break_applied);
    const AggregatedPrediction st_fn = aggregate(tally_of(0, 6, 6));
    REQUIRE(st_fn.final == MICode::ST);
    REQUIRE(st_fn.tie_break_applied);

    REQUIRE(crit.elapsed_s() < 1.0);
    crit.passed = true;
}

TEST_CASE("criterion 2: trajectory counts per configuration") {
    Criterion crit{"2 trajectory-count invariants"};

    TempDir tmp;
    Dataset dataset;
    for (int i = 0; i < 5; ++i) {
        EvalUtterance utt;
        utt.id = {"acc", i};
        utt.transcript = "utterance " + std::to_string(i);
        utt.gold = kAllCodes[i % 3];
        utt.clip_wav = write_wav(AudioBuffer{8000, 1, std::vector<int16_t>(800, 64)});
        dataset.utterances.push_back(std::move(utt));
    }

    const std::pair<const char*, size_t> expected[] = {
        {"mm-sc-audio", 12}, {"mm-sc-audio-text", 12}, {"wo-P1", 9}, {"wo-P2", 9},
        {"wo-P3", 9},        {"wo-P4", 9},             {"direct", 1},
    };
    for (const auto& [name, per_utterance] : expected) {
        AlmGateway::Options options;
        options.mode = BackendMode::Mock;
        options.cache_dir = tmp.path / "cache";
        AlmGateway gateway(std::make_unique<MockBackend>(), options);
        const RunArtifacts art =
            run_experiment(*find_builtin(name), dataset, gateway, tmp.path / "runs");
        REQUIRE(art.trajectories.size() == 5 * per_utterance);
        // and per utterance, exactly one trajectory per (prompt, sample) key
        std::set<std::string> keys;
        for (const Trajectory& t : art.trajectories) {
            keys.insert(t.utterance_id.str() + "|" + std::string(to_string(t.prompt_id)) + "|" +
                        std::to_string(t.sample_index));
        }
        REQUIRE(keys.size() == art.trajectories.size());
    }
    crit.passed = true;
}

TEST_CASE("criterion 3: metrics fixtures and macro-F1 identity") {
    Criterion crit{"3 metrics fixtures"};

    const std::vector<MICode> gold{MICode::CT, MICode::CT, MICode::ST, MICode::FN};
    const std::vector<MICode> pred{MICode::CT, MICode::ST, MICode::ST, MICode::FN};
    const MetricsReport fixture = metrics(confusion(gold, pred));
    REQUIRE(std::abs(fixture.accuracy - 0.75) < 1e-9);
    REQUIRE(std::abs(fixture.macro_f1 - 7.0 / 9.0) < 1e-9);

    std::vector<MICode> balanced;
    for (int i = 0; i < 9; ++i) balanced.push_back(kAllCodes[i % 3]);
    const std::vector<MICode> all_fn(balanced.size(), MICode::FN);
    const MetricsReport fn_report = metrics(confusion(balanced, all_fn));
    REQUIRE(std::abs(fn_report.accuracy - 1.0 / 3.0) < 1e-9);
    REQUIRE(std::abs(fn_report.macro_f1 - 1.0 / 6.0) < 1e-9);

    std::mt19937 rng(1234);
    std::uniform_int_distribution<int> cell(0, 25);
    for (int trial = 0; trial < 1000; ++trial) {
        ConfusionMatrix cm;
        for (MICode g : kAllCodes) {
            for (MICode p : kAllCodes) cm.at(g, p) = cell(rng);
        }
        const MetricsReport report = metrics(cm);
        const double mean = (report.for_code(MICode::CT).f1 + report.for_code(MICode::ST).f1 +
                             report.for_code(MICode::FN).f1) /
                            3.0;
        REQUIRE(std::abs(report.macro_f1 - mean) < 1e-12);
    }
    crit.passed = true;
}

TEST_CASE("criterion 4: alignment cost oracle and replay") {
    Criterion crit{"4 alignment oracle"};

    std::mt19937 rng(4242);
    const std::vector<std::string> vocab = {"i",    "we",   "drink", "less",  "want", "stop",
                                            "week", "hard", "maybe", "night", "try",  "feel"};
    std::uniform_int_distribution<size_t> len_dist(0, 50);
    std::uniform_int_distribution<size_t> word_dist(0, vocab.size() - 1);

    for (int trial = 0; trial < 200; ++trial) {
        std::vector<std::string> asr(len_dist(rng));
        std::vector<std::string> ref(len_dist(rng));
        for (auto& t : asr) t = vocab[word_dist(rng)];
        for (auto& t : ref) t = vocab[word_dist(rng)];

        // quadratic DP oracle over the full cost matrix
        std::vector<std::vector<size_t>> dp(asr.size() + 1,
                                            std::vector<size_t>(ref.size() + 1));
        for (size_t i = 0; i <= asr.size(); ++i) dp[i][0] = i;
        for (size_t j = 0; j <= ref.size(); ++j) dp[0][j] = j;
        for (size_t i = 1; i <= asr.size(); ++i) {
            for (size_t j = 1; j <= ref.size(); ++j) {
                dp[i][j] = std::min({dp[i - 1][j - 1] + (asr[i - 1] == ref[j - 1] ? 0u : 1u),
                                     dp[i - 1][j] + 1, dp[i][j - 1] + 1});
            }
        }

        const std::vector<AlignOp> ops = align_tokens(asr, ref);
        size_t cost = 0;
        std::vector<std::string> replayed;
        for (const AlignOp& op : ops) {
            switch (op.kind) {
                case AlignOpKind::Match:
                    replayed.push_back(asr[*op.asr_index]);
                    break;
                case AlignOpKind::Substitute:
                    replayed.push_back(ref[*op.ref_index]);
                    ++cost;
                    break;
                case AlignOpKind::Delete:
                    replayed.push_back(ref[*op.ref_index]);
                    ++cost;
                    break;
                case AlignOpKind::Insert:
                    ++cost;
                    break;
            }
        }
        REQUIRE(cost == dp[asr.size()][ref.size()]);
        REQUIRE(replayed == ref);
    }

    REQUIRE(crit.elapsed_s() < 5.0);
    crit.passed = true;
}

TEST_CASE("criterion 5: session QC separates clean, noisy, and shuffled ASR") {
    Criterion crit{"5 alignment QC discrimination"};

    // 12 utterances x 8 distinct-ish tokens, fixed seed
    std::mt19937 rng(777);
    std::uniform_int_distribution<int> letter(0, 25);
    auto random_word = [&] {
        std::string w;
        for (int i = 0; i < 6; ++i) w.push_back(static_cast<char>('a' + letter(rng)));
        return w;
    };
    std::vector<ReferenceUtterance> reference;
    std::vector<std::string> tokens;
    for (int u = 0; u < 12; ++u) {
        std::string text;
        for (int k = 0; k < 8; ++k) {
            const std::string w = random_word();
            tokens.push_back(w);
            text += w + " ";
        }
        reference.push_back({{"qc", u}, "client", text, MICode::FN});
    }
    auto words_for = [](const std::vector<std::string>& toks) {
        std::vector<TimedWord> words;
        for (size_t i = 0; i < toks.size(); ++i) {
            words.push_back({toks[i], 0.4 * static_cast<double>(i),
                             0.4 * static_cast<double>(i) + 0.3});
        }
        return words;
    };
    const double threshold = 0.6;

    // identical ASR: score exactly 1.0
    const auto clean = align_session(words_for(tokens), reference);
    const QcDecision clean_qc = qc_filter(clean, threshold);
    REQUIRE(clean_qc.session_score == 1.0);
    REQUIRE(clean_qc.accept);

    // 10% of tokens replaced with unrelated garbage. Measured score with
    // this seed: 0.895833 (86/96 matched, none of the garbage fuzzy-matches).
    std::vector<std::string> noisy = tokens;
    for (size_t i = 4; i < noisy.size(); i += 10) {
        noisy[i] = "zqzqzq" + std::to_string(i);
    }
    const QcDecision noisy_qc = qc_filter(align_session(words_for(noisy), reference), threshold);
    std::printf("[acceptance]   measured noisy session score: %.6f\n", noisy_qc.session_score);
    REQUIRE(noisy_qc.session_score >= 0.89);
    REQUIRE(noisy_qc.session_score <= 0.91);
    REQUIRE(noisy_qc.accept);

    // fully shuffled ASR: measured score with this seed: 0.052083 (5/96),
    // far below the threshold, excluded
    std::vector<std::string> shuffled = tokens;
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    const QcDecision shuffled_qc =
        qc_filter(align_session(words_for(shuffled), reference), threshold);
    std::printf("[acceptance]   measured shuffled session score: %.6f\n",
                shuffled_qc.session_score);
    REQUIRE(shuffled_qc.session_score < 0.35);
    REQUIRE_FALSE(shuffled_qc.accept);

    crit.passed = true;
}

TEST_CASE("criterion 6: codec exactness") {
    Criterion crit{"6 codec exactness"};

    std::mt19937 rng(606);
    std::uniform_int_distribution<int> sample(-32768, 32767);
    std::uniform_int_distribution<size_t> frames_dist(0, 100000);
    const uint32_t rates[] = {8000, 16000, 44100};
    for (int trial = 0; trial < 25; ++trial) {
        AudioBuffer buf;
        buf.sample_rate_hz = rates[trial % 3];
        buf.channels = static_cast<uint16_t>(1 + trial % 2);
        buf.samples.resize(frames_dist(rng) * buf.channels);
        for (int16_t& s : buf.samples) s = static_cast<int16_t>(sample(rng));

        const std::vector<uint8_t> bytes = write_wav(buf);
        const AudioBuffer decoded = read_wav(bytes);
        REQUIRE(decoded == buf);
        REQUIRE(write_wav(decoded) == bytes); // byte-identical re-encode
    }

    AudioBuffer one_sec;
    one_sec.sample_rate_hz = 16000;
    one_sec.channels = 1;
    one_sec.samples.resize(32000);
    for (size_t i = 0; i < one_sec.samples.size(); ++i) {
        one_sec.samples[i] = static_cast<int16_t>(i % 8191);
    }
    const AudioBuffer cut = slice_audio(one_sec, TimeSpan(0.5, 1.5));
    REQUIRE(cut.samples.size() == 16000);

    // complementary slices concatenate to the original
    for (double t : {0.25, 0.5, 1.0, 1.333, 1.999}) {
        const AudioBuffer head = slice_audio(one_sec, TimeSpan(0.0, t));
        const AudioBuffer tail = slice_audio(one_sec, TimeSpan(t, one_sec.duration_s()));
        std::vector<int16_t> joined = head.samples;
        joined.insert(joined.end(), tail.samples.begin(), tail.samples.end());
        REQUIRE(joined == one_sec.samples);
    }
    crit.passed = true;
}

TEST_CASE("criterion 7: end-to-end ablation determinism through the CLI") {
    Criterion crit{"7 end-to-end determinism"};

    TempDir tmp;
    write_session(tmp.path / "data", "s1");
    write_echo_script(tmp.path / "script.json", "s1");

    const std::string common = std::string(" --dataset ") + (tmp.path / "data").string() +
                               " --backend mock --script " + (tmp.path / "script.json").string() +
                               " --cache-dir " + (tmp.path / "cache").string();

    const CliResult first =
        run_cli(MMSC_CLI_PATH, "ablate" + common + " --out-dir " + (tmp.path / "run1").string(),
                tmp.path);
    REQUIRE(first.exit_code == 0);
    const CliResult second =
        run_cli(MMSC_CLI_PATH, "ablate" + common + " --out-dir " + (tmp.path / "run2").string(),
                tmp.path);
    REQUIRE(second.exit_code == 0);

    const std::string csv1 = read_text_file(tmp.path / "run1/report.csv");
    REQUIRE(std::count(csv1.begin(), csv1.end(), '\n') == 10); // header + 9 config rows
    for (const RunConfig& config : builtin_configs()) {
        REQUIRE(csv1.find("\n" + config.name + ",") != std::string::npos);
    }

    // byte-identical prediction and report files across the two runs
    REQUIRE(csv1 == read_text_file(tmp.path / "run2/report.csv"));
    REQUIRE(read_text_file(tmp.path / "run1/report.md") ==
            read_text_file(tmp.path / "run2/report.md"));
    for (const RunConfig& config : builtin_configs()) {
        const auto rel = std::filesystem::path(config.name) / (config.name + ".pred.jsonl");
        REQUIRE(read_text_file(tmp.path / "run1" / rel) ==
                read_text_file(tmp.path / "run2" / rel));
    }

    REQUIRE(crit.elapsed_s() < 30.0);
    crit.passed = true;
}

TEST_CASE("criterion 8: report renders fractions as two-decimal percentages") {
    Criterion crit{"8 report formatting"};

    REQUIRE(format_pct(0.5256) == "52.56");

    SuiteRow row;
    row.config_name = "mm-sc-audio";
    MetricsReport report;
    report.accuracy = 0.5256;
    report.macro_precision = 0.5403;
    report.macro_recall = 0.4745;
    report.macro_f1 = 0.4640;
    row.report = report;
    const std::string csv = render_report_csv(std::vector<SuiteRow>{row});
    REQUIRE(csv.find("mm-sc-audio,52.56,54.03,47.45,46.40") != std::string::npos);
    crit.passed = true;
}
