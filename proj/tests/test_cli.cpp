#include <doctest.h>

#include <httplib.h>

#include <csignal>
#include <thread>

#include <unistd.h>

#include "fixture.hpp"
#include "mmsc/experiment.hpp"
#include "mmsc/io.hpp"

using namespace mmsc;
using namespace mmsc::testfix;

namespace {

const std::string kCli = MMSC_CLI_PATH;

struct TempDir {
    std::filesystem::path path;

    TempDir() {
        path = std::filesystem::temp_directory_path() /
               ("mmsc-cli-" + std::to_string(::getpid()) + "-" +
                std::to_string(reinterpret_cast<uintptr_t>(this)));
        std::filesystem::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path, ec);
    }
};

} // namespace

TEST_CASE("--help exits 0 on the top level and every subcommand") {
    TempDir tmp;
    CHECK(run_cli(kCli, "--help", tmp.path).exit_code == 0);
    for (const char* sub : {"align", "segment", "run", "aggregate", "evaluate", "ablate",
                            "report", "mock-backend"}) {
        const CliResult result = run_cli(kCli, std::string(sub) + " --help", tmp.path);
        CHECK(result.exit_code == 0);
        CHECK(result.output.find("Usage") != std::string::npos);
    }
}

TEST_CASE("usage errors exit 1") {
    TempDir tmp;
    CHECK(run_cli(kCli, "", tmp.path).exit_code == 1);
    CHECK(run_cli(kCli, "no-such-subcommand", tmp.path).exit_code == 1);
    CHECK(run_cli(kCli, "align --nope x", tmp.path).exit_code == 1);
    CHECK(run_cli(kCli, "align", tmp.path).exit_code == 1); // missing required flags
}

TEST_CASE("align then segment over a synthetic session") {
    TempDir tmp;
    write_session(tmp.path, "s1");
    const std::string aligned = (tmp.path / "s1.aligned.jsonl").string();

    const CliResult result = run_cli(
        kCli,
        "align --audio " + (tmp.path / "s1.wav").string() + " --asr " +
            (tmp.path / "s1.asr.json").string() + " --ref " +
            (tmp.path / "s1.ref.jsonl").string() + " --out " + aligned,
        tmp.path);
    CHECK(result.exit_code == 0);
    CHECK(result.output.find("accept") != std::string::npos);
    REQUIRE(std::filesystem::exists(aligned));
    const std::string aligned_text = read_text_file(aligned);
    CHECK(std::count(aligned_text.begin(), aligned_text.end(), '\n') == 8);

    const CliResult seg = run_cli(kCli,
                                  "segment --audio " + (tmp.path / "s1.wav").string() +
                                      " --aligned " + aligned + " --out-dir " +
                                      (tmp.path / "clips").string(),
                                  tmp.path);
    CHECK(seg.exit_code == 0);
    // one clip per gold-coded utterance
    CHECK(std::filesystem::exists(tmp.path / "clips/s1/1.wav"));
    CHECK(std::filesystem::exists(tmp.path / "clips/s1/3.wav"));
    CHECK(std::filesystem::exists(tmp.path / "clips/s1/4.wav"));
    CHECK(std::filesystem::exists(tmp.path / "clips/s1/6.wav"));
    CHECK(std::filesystem::exists(tmp.path / "clips/s1/7.wav"));
    CHECK_FALSE(std::filesystem::exists(tmp.path / "clips/s1/0.wav"));
}

TEST_CASE("align maps missing input to exit 1") {
    TempDir tmp;
    const CliResult result =
        run_cli(kCli,
                "align --asr " + (tmp.path / "missing.json").string() + " --ref " +
                    (tmp.path / "missing.jsonl").string() + " --out " +
                    (tmp.path / "out.jsonl").string(),
                tmp.path);
    CHECK(result.exit_code == 1);
    CHECK(result.output.find("error") != std::string::npos);
}

TEST_CASE("run with the mock backend, then idempotent rerun from the warm cache") {
    TempDir tmp;
    write_session(tmp.path / "data", "s1");
    const std::string base = " --dataset " + (tmp.path / "data").string() + " --backend mock" +
                             " --cache-dir " + (tmp.path / "cache").string();

    const CliResult first =
        run_cli(kCli, "run --config direct" + base + " --out-dir " + (tmp.path / "r1").string(),
                tmp.path);
    CHECK(first.exit_code == 0);
    CHECK(first.output.find("accuracy") != std::string::npos);

    const CliResult second =
        run_cli(kCli, "run --config direct" + base + " --out-dir " + (tmp.path / "r2").string(),
                tmp.path);
    CHECK(second.exit_code == 0);

    CHECK(read_text_file(tmp.path / "r1/direct/direct.pred.jsonl") ==
          read_text_file(tmp.path / "r2/direct/direct.pred.jsonl"));
    // warm run serves everything from the cache
    const std::string traj2 = read_text_file(tmp.path / "r2/direct/direct.traj.jsonl");
    CHECK(traj2.find("\"cached\":true") != std::string::npos);
    CHECK(traj2.find("\"cached\":false") == std::string::npos);

    // two warm runs have byte-identical trajectory files as well
    const CliResult third =
        run_cli(kCli, "run --config direct" + base + " --out-dir " + (tmp.path / "r3").string(),
                tmp.path);
    CHECK(third.exit_code == 0);
    CHECK(read_text_file(tmp.path / "r3/direct/direct.traj.jsonl") == traj2);
}

TEST_CASE("the mock-backend subcommand serves the live HTTP path end to end") {
    TempDir tmp;
    write_session(tmp.path / "data", "s1");
    write_echo_script(tmp.path / "script.json", "s1");

    const int port = 20000 + ::getpid() % 20000;
    const std::filesystem::path pid_file = tmp.path / "server.pid";
    const std::string start = kCli + " mock-backend --port " + std::to_string(port) +
                              " --script " + (tmp.path / "script.json").string() + " > " +
                              (tmp.path / "server.log").string() + " 2>&1 & echo $! > " +
                              pid_file.string();
    REQUIRE(std::system(start.c_str()) == 0);
    struct KillOnExit {
        std::filesystem::path pid_file;
        ~KillOnExit() {
            try {
                ::kill(std::stoi(read_text_file(pid_file)), SIGTERM);
            } catch (...) {
            }
        }
    } killer{pid_file};

    bool up = false;
    for (int i = 0; i < 100 && !up; ++i) {
        httplib::Client probe("http://127.0.0.1:" + std::to_string(port));
        probe.set_connection_timeout(0, 200000);
        if (auto res = probe.Get("/healthz")) up = res->status == 200;
        if (!up) std::this_thread::sleep_for(std::chrono::milliseconds(20));
    }
    REQUIRE(up);

    const std::string env = "ALM_BASE_URL=http://127.0.0.1:" + std::to_string(port) +
                            " ALM_MODEL_ID=mock-model ";
    const CliResult result = run_cli(
        kCli,
        "run --config mm-sc-audio --dataset " + (tmp.path / "data").string() +
            " --backend live --cache-dir " + (tmp.path / "cache").string() + " --out-dir " +
            (tmp.path / "runs").string(),
        tmp.path, env);
    CHECK(result.exit_code == 0);
    CHECK(result.output.find("accuracy 100.00") != std::string::npos);
    const std::string traj =
        read_text_file(tmp.path / "runs/mm-sc-audio/mm-sc-audio.traj.jsonl");
    CHECK(traj.find("\"backend\":\"mock-model\"") != std::string::npos);
}

TEST_CASE("replay-only with a cold cache exits 2 and names the cache misses") {
    TempDir tmp;
    write_session(tmp.path / "data", "s1");
    const CliResult result = run_cli(
        kCli,
        "run --config direct --dataset " + (tmp.path / "data").string() + " --replay-only" +
            " --cache-dir " + (tmp.path / "cache").string() + " --out-dir " +
            (tmp.path / "runs").string(),
        tmp.path);
    CHECK(result.exit_code == 2);
    CHECK(result.output.find("CacheMiss") != std::string::npos);
}

TEST_CASE("aggregate and evaluate reproduce the run's predictions") {
    TempDir tmp;
    write_session(tmp.path / "data", "s1");
    write_echo_script(tmp.path / "script.json", "s1");
    const std::string base = " --dataset " + (tmp.path / "data").string() + " --backend mock" +
                             " --script " + (tmp.path / "script.json").string() +
                             " --cache-dir " + (tmp.path / "cache").string();
    const CliResult run_result = run_cli(
        kCli, "run --config mm-sc-audio" + base + " --out-dir " + (tmp.path / "runs").string(),
        tmp.path);
    REQUIRE(run_result.exit_code == 0);
    CHECK(run_result.output.find("accuracy 100.00") != std::string::npos);

    const std::string traj = (tmp.path / "runs/mm-sc-audio/mm-sc-audio.traj.jsonl").string();
    const std::string repred = (tmp.path / "repred.jsonl").string();
    CHECK(run_cli(kCli, "aggregate --traj " + traj + " --out " + repred, tmp.path).exit_code == 0);

    // the re-aggregated finals agree with the run's predictions
    const std::string original =
        read_text_file(tmp.path / "runs/mm-sc-audio/mm-sc-audio.pred.jsonl");
    std::vector<UtterancePrediction> run_preds;
    size_t pos = 0;
    while (pos < original.size()) {
        size_t nl = original.find('\n', pos);
        if (nl == std::string::npos) nl = original.size();
        run_preds.push_back(prediction_from_jsonl(original.substr(pos, nl - pos)));
        pos = nl + 1;
    }
    const std::string re = read_text_file(repred);
    size_t line_count = 0;
    pos = 0;
    while (pos < re.size()) {
        size_t nl = re.find('\n', pos);
        if (nl == std::string::npos) nl = re.size();
        const UtterancePrediction again = prediction_from_jsonl(re.substr(pos, nl - pos));
        CHECK(again.final == run_preds[line_count].final);
        CHECK(again.tally == run_preds[line_count].tally);
        ++line_count;
        pos = nl + 1;
    }
    CHECK(line_count == run_preds.size());

    const CliResult eval = run_cli(kCli,
                                   "evaluate --pred " + repred + " --ref " +
                                       (tmp.path / "data/s1.ref.jsonl").string() + " --out " +
                                       (tmp.path / "metrics.json").string(),
                                   tmp.path);
    CHECK(eval.exit_code == 0);
    CHECK(eval.output.find("accuracy 100.00") != std::string::npos);
    CHECK(std::filesystem::exists(tmp.path / "metrics.json"));
}

TEST_CASE("config file values apply and unknown keys are rejected") {
    TempDir tmp;
    write_session(tmp.path / "data", "s1");
    write_text_file(tmp.path / "custom.toml", "name = custom\n"
                                              "prompts = \"P1\"\n"
                                              "samples = 2\n"
                                              "backend = mock\n");
    const CliResult result = run_cli(
        kCli,
        "run --config " + (tmp.path / "custom.toml").string() + " --dataset " +
            (tmp.path / "data").string() + " --cache-dir " + (tmp.path / "cache").string() +
            " --out-dir " + (tmp.path / "runs").string(),
        tmp.path);
    CHECK(result.exit_code == 0);
    const std::string traj = read_text_file(tmp.path / "runs/custom/custom.traj.jsonl");
    CHECK(std::count(traj.begin(), traj.end(), '\n') == 5 * 2); // 5 gold utterances x 2 samples

    write_text_file(tmp.path / "bad.toml", "coffee = strong\n");
    const CliResult bad = run_cli(kCli,
                                  "run --config " + (tmp.path / "bad.toml").string() +
                                      " --dataset " + (tmp.path / "data").string() +
                                      " --out-dir " + (tmp.path / "runs2").string(),
                                  tmp.path);
    CHECK(bad.exit_code == 1);
    CHECK(bad.output.find("coffee") != std::string::npos);
}
