// Copyright 2026 The ECHO Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

// End-to-end tests of the installed CLI surface: exit codes, artifact
// layout, determinism of generated corpora, checkpoints and reports.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <sys/wait.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "json.hpp"

namespace fs = std::filesystem;

namespace {

struct RunResult {
  int exit_code = -1;
  std::string output; // stdout + stderr interleaved
};

RunResult run_cli(const std::string& args) {
  const std::string cmd = std::string("\"") + ECHO_CLI_PATH + "\" " + args + " 2>&1";
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  RunResult r;
  char buf[4096];
  size_t n;
  while ((n = fread(buf, 1, sizeof(buf), pipe)) > 0) r.output.append(buf, n);
  const int status = pclose(pipe);
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in.good());
  return std::string(std::istreambuf_iterator<char>(in), {});
}

std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string line;
  while (std::getline(ss, line)) {
    if (!line.empty()) out.push_back(line);
  }
  return out;
}

// Shared corpus + short training run, built once. Tiny model so the whole
// suite stays fast; flags mirror a realistic invocation.
struct CliEnv {
  fs::path root;
  fs::path anomaly_dir;
  fs::path classify_dir;
  fs::path train_dir; // run with checkpoint_every=3, total 6
  std::string model_sets =
      "--set model.embed_dim=16 model.depth=2 model.heads=2 "
      "train.total_steps=6 train.warmup_steps=2 train.clip_switch_step=3 "
      "train.batch_size=2 train.checkpoint_every=3";
};

const CliEnv& env() {
  static CliEnv e = [] {
    CliEnv v;
    v.root = fs::temp_directory_path() / "echo_cli_test";
    fs::remove_all(v.root);
    fs::create_directories(v.root);
    v.anomaly_dir = v.root / "corpus_anomaly";
    v.classify_dir = v.root / "corpus_classify";
    v.train_dir = v.root / "run_a";

    const std::string grid = R"({
      "task": "anomaly",
      "sample_rate_hz": 16000,
      "duration_s": 0.6,
      "machines": [
        {"name": "mA", "base_rotation_hz": 25.0, "train_normals": 3, "test_normals": 2,
         "test_anomalies": 2, "anomaly_kinds": ["extra_harmonic", "impulse_train"],
         "anomaly_strength": 1.5},
        {"name": "mB", "base_rotation_hz": 40.0, "train_normals": 3, "test_normals": 2,
         "test_anomalies": 2, "anomaly_kinds": ["noise_boost"], "anomaly_strength": 1.5}
      ]
    })";
    std::ofstream spec(v.root / "grid.json");
    spec << grid;
    spec.close();

    const std::string cls_grid = R"({
      "task": "classification",
      "sample_rate_hz": 16000,
      "duration_s": 0.6,
      "per_class": 4,
      "classes": [
        {"name": "healthy", "anomaly_kind": "none"},
        {"name": "bearing", "anomaly_kind": "impulse_train", "anomaly_strength": 1.5}
      ]
    })";
    std::ofstream cspec(v.root / "cls_grid.json");
    cspec << cls_grid;
    cspec.close();

    RunResult g = run_cli("gen-data --spec " + (v.root / "grid.json").string() + " --out " +
                          v.anomaly_dir.string() + " --seed 21");
    REQUIRE(g.exit_code == 0);
    g = run_cli("gen-data --spec " + (v.root / "cls_grid.json").string() + " --out " +
                v.classify_dir.string() + " --seed 22");
    REQUIRE(g.exit_code == 0);

    const RunResult t = run_cli("train --data " + (v.anomaly_dir / "manifest.json").string() +
                                " --out " + v.train_dir.string() + " " + v.model_sets);
    REQUIRE(t.exit_code == 0);
    return v;
  }();
  return e;
}

}  // namespace

TEST_CASE("version flag and bad invocations") {
  const RunResult v = run_cli("--version");
  CHECK(v.exit_code == 0);
  CHECK(v.output.find("echo 0.1.0") != std::string::npos);

  CHECK(run_cli("").exit_code == 2);                  // a subcommand is required
  CHECK(run_cli("frobnicate").exit_code == 2);        // unknown subcommand
  CHECK(run_cli("train --out x").exit_code == 2);     // missing required --data
  CHECK(run_cli("embed --threads 0").exit_code == 2); // positive-number check
}

TEST_CASE("gen-data validates its inputs") {
  const fs::path dir = env().root / "gen_probe";
  CHECK(run_cli("gen-data --out " + dir.string()).exit_code == 2); // neither source
  CHECK(run_cli("gen-data --preset reference-anomaly --spec x.json --out " + dir.string())
            .exit_code == 2); // both sources
  CHECK(run_cli("gen-data --preset nonesuch --out " + dir.string()).exit_code == 2);
  CHECK(run_cli("gen-data --spec /nonexistent/grid.json --out " + dir.string()).exit_code == 3);

  std::ofstream bad(env().root / "bad_grid.json");
  bad << "{oops";
  bad.close();
  CHECK(run_cli("gen-data --spec " + (env().root / "bad_grid.json").string() + " --out " +
                dir.string())
            .exit_code == 2);
}

TEST_CASE("gen-data output is reproducible from the seed") {
  const fs::path a = env().root / "gen_rep_a";
  const fs::path b = env().root / "gen_rep_b";
  const std::string spec = (env().root / "grid.json").string();
  REQUIRE(run_cli("gen-data --spec " + spec + " --out " + a.string() + " --seed 77").exit_code ==
          0);
  REQUIRE(run_cli("gen-data --spec " + spec + " --out " + b.string() + " --seed 77").exit_code ==
          0);
  CHECK(slurp(a / "manifest.json") == slurp(b / "manifest.json"));
  CHECK(slurp(a / "mA/train/normal/normal_000.wav") == slurp(b / "mA/train/normal/normal_000.wav"));
  CHECK(slurp(a / "mB/test/anomaly/anomaly_001.wav") == slurp(b / "mB/test/anomaly/anomaly_001.wav"));
}

TEST_CASE("train writes metrics with a header and final checkpoints") {
  const CliEnv& e = env();
  CHECK(fs::exists(e.train_dir / "train_state_final.echckpt"));
  CHECK(fs::exists(e.train_dir / "encoder_final.echckpt"));
  CHECK(fs::exists(e.train_dir / "ckpt_step000003.echckpt"));

  const auto lines = lines_of(slurp(e.train_dir / "metrics.jsonl"));
  REQUIRE(lines.size() == 7); // header + 6 steps
  const auto header = nlohmann::json::parse(lines[0]);
  CHECK(header.at("schema") == "echo-train-metrics/1");
  CHECK(header.at("model").at("embed_dim") == 16);
  CHECK(header.at("train").at("total_steps") == 6);
  for (int i = 1; i <= 6; ++i) {
    const auto rec = nlohmann::json::parse(lines[i]);
    CHECK(rec.at("step") == i);
    CHECK(rec.at("total").get<double>() >= 0.0);
    CHECK(rec.at("lr").get<double>() >= 0.0);
    CHECK(rec.at("grad_norm").get<double>() > 0.0);
  }
}

TEST_CASE("resume from a mid-run checkpoint reproduces the final state bytes") {
  const CliEnv& e = env();
  const fs::path resumed = e.root / "run_resumed";
  const RunResult r = run_cli("train --data " + (e.anomaly_dir / "manifest.json").string() +
                              " --out " + resumed.string() + " --resume " +
                              (e.train_dir / "ckpt_step000003.echckpt").string());
  REQUIRE(r.exit_code == 0);

  CHECK(slurp(resumed / "train_state_final.echckpt") ==
        slurp(e.train_dir / "train_state_final.echckpt"));
  CHECK(slurp(resumed / "encoder_final.echckpt") == slurp(e.train_dir / "encoder_final.echckpt"));

  // Continuation metrics hold exactly steps 4..6.
  const auto lines = lines_of(slurp(resumed / "metrics.jsonl"));
  REQUIRE(lines.size() == 3);
  for (int i = 0; i < 3; ++i) {
    CHECK(nlohmann::json::parse(lines[i]).at("step") == 4 + i);
  }

  // Resume refuses config edits and exhausted checkpoints.
  CHECK(run_cli("train --data " + (e.anomaly_dir / "manifest.json").string() + " --out " +
                (e.root / "run_x").string() + " --resume " +
                (e.train_dir / "ckpt_step000003.echckpt").string() + " --set train.total_steps=9")
            .exit_code == 2);
  CHECK(run_cli("train --data " + (e.anomaly_dir / "manifest.json").string() + " --out " +
                (e.root / "run_y").string() + " --resume " +
                (e.train_dir / "train_state_final.echckpt").string())
            .exit_code == 2);
}

TEST_CASE("embed: cache runs cold then warm with identical artifacts") {
  const CliEnv& e = env();
  const std::string ckpt = (e.train_dir / "encoder_final.echckpt").string();
  const std::string data = (e.anomaly_dir / "manifest.json").string();
  const std::string cache = (e.root / "emb_cache.jsonl").string();
  const fs::path out1 = e.root / "emb1.jsonl";
  const fs::path out2 = e.root / "warm" / "emb1.jsonl"; // same leaf name, so headers match
  fs::create_directories(out2.parent_path());

  const RunResult cold = run_cli("embed --ckpt " + ckpt + " --data " + data + " --out " +
                                 out1.string() + " --cache " + cache);
  REQUIRE(cold.exit_code == 0);
  CHECK(cold.output.find("cached 0, computed 14") != std::string::npos);

  const RunResult warm = run_cli("embed --ckpt " + ckpt + " --data " + data + " --out " +
                                 out2.string() + " --cache " + cache + " --threads 3");
  REQUIRE(warm.exit_code == 0);
  CHECK(warm.output.find("cached 14, computed 0") != std::string::npos);

  CHECK(slurp(out1) == slurp(out2));
  CHECK(slurp(out1.string() + ".bin") == slurp(out2.string() + ".bin"));

  // Train-state checkpoints embed too (student weights by default); the blob
  // matches the plain-encoder embedding bytes.
  const RunResult ts = run_cli("embed --ckpt " +
                               (e.train_dir / "train_state_final.echckpt").string() + " --data " +
                               data + " --out " + (e.root / "emb3.jsonl").string());
  CHECK(ts.exit_code == 0);
  CHECK(slurp((e.root / "emb3.jsonl").string() + ".bin") == slurp(out1.string() + ".bin"));

  CHECK(run_cli("embed --ckpt /nonexistent.echckpt --data " + data + " --out " +
                (e.root / "emb4.jsonl").string())
            .exit_code == 3);
}

TEST_CASE("eval-anomaly writes deterministic reports and validates flags") {
  const CliEnv& e = env();
  const std::string ckpt = (e.train_dir / "encoder_final.echckpt").string();
  const std::string data = (e.anomaly_dir / "manifest.json").string();
  const fs::path rep1 = e.root / "report1.json";
  const fs::path rep2 = e.root / "nested" / "report2.json";
  fs::create_directories(rep2.parent_path());

  const RunResult r1 = run_cli("eval-anomaly --ckpt " + ckpt + " --data " + data + " --report " +
                               rep1.string() + " --csv " + (e.root / "report1.csv").string() +
                               " --set eval.k=2");
  REQUIRE(r1.exit_code == 0);
  CHECK(r1.output.find("aggregate") != std::string::npos);

  const auto doc = nlohmann::json::parse(slurp(rep1));
  CHECK(doc.at("schema") == "echo-eval-report/1");
  CHECK(doc.at("task") == "anomaly");
  CHECK(doc.at("config").at("k") == 2);
  REQUIRE(doc.at("groups").size() == 2);
  for (const auto& g : doc.at("groups")) {
    CHECK(g.at("auc").get<double>() >= 0.0);
    CHECK(g.at("auc").get<double>() <= 1.0);
    CHECK(g.at("n_train") == 3);
    CHECK(g.at("n_test") == 4);
  }
  CHECK(slurp(e.root / "report1.csv").find("mA") != std::string::npos);

  // Same invocation to a different path: byte-identical report.
  const RunResult r2 = run_cli("eval-anomaly --ckpt " + ckpt + " --data " + data + " --report " +
                               rep2.string() + " --set eval.k=2");
  REQUIRE(r2.exit_code == 0);
  CHECK(slurp(rep1) == slurp(rep2));

  // Teacher weights run the pipeline but embed differently from the student
  // (coarse AUCs on 4 test files can coincide, so compare embedding bytes).
  const fs::path rep3 = e.root / "report3.json";
  const RunResult r3 = run_cli("eval-anomaly --ckpt " +
                               (e.train_dir / "train_state_final.echckpt").string() +
                               " --weights teacher --data " + data + " --report " + rep3.string() +
                               " --set eval.k=2");
  REQUIRE(r3.exit_code == 0);
  CHECK(nlohmann::json::parse(slurp(rep3)).at("task") == "anomaly");
  const std::string state = (e.train_dir / "train_state_final.echckpt").string();
  for (const char* weights : {"student", "teacher"}) {
    fs::create_directories(e.root / weights);
    const RunResult re = run_cli("embed --ckpt " + state + " --weights " + weights + " --data " +
                                 data + " --out " +
                                 (e.root / weights / "weights_emb.jsonl").string());
    REQUIRE(re.exit_code == 0);
  }
  CHECK(slurp(e.root / "student" / "weights_emb.jsonl.bin") !=
        slurp(e.root / "teacher" / "weights_emb.jsonl.bin"));

  CHECK(run_cli("eval-anomaly --ckpt " + ckpt + " --data " + data + " --report " +
                (e.root / "r.json").string() + " --k 0")
            .exit_code == 2);
  CHECK(run_cli("eval-anomaly --ckpt " + ckpt + " --data " + data + " --report " +
                (e.root / "r.json").string() + " --metric manhattan")
            .exit_code == 2);
}

TEST_CASE("eval-classify runs loocv and kfold") {
  const CliEnv& e = env();
  const std::string ckpt = (e.train_dir / "encoder_final.echckpt").string();
  const std::string data = (e.classify_dir / "manifest.json").string();
  const fs::path rep = e.root / "cls_report.json";

  const RunResult r = run_cli("eval-classify --ckpt " + ckpt + " --data " + data + " --report " +
                              rep.string());
  REQUIRE(r.exit_code == 0);
  const auto doc = nlohmann::json::parse(slurp(rep));
  CHECK(doc.at("task") == "classification");
  CHECK(doc.at("n_predictions") == 8);
  CHECK(doc.at("folds").size() == 8);
  CHECK(doc.at("classes") == nlohmann::json({"bearing", "healthy"}));

  const fs::path krep = e.root / "cls_report_kfold.json";
  const RunResult kr = run_cli("eval-classify --ckpt " + ckpt + " --data " + data + " --report " +
                               krep.string() + " --cv kfold --folds 4 --seed 9");
  REQUIRE(kr.exit_code == 0);
  CHECK(nlohmann::json::parse(slurp(krep)).at("folds").size() == 4);

  // Task mismatch: classification eval on an anomaly manifest.
  CHECK(run_cli("eval-classify --ckpt " + ckpt + " --data " +
                (e.anomaly_dir / "manifest.json").string() + " --report " +
                (e.root / "bad.json").string())
            .exit_code == 2);
}

TEST_CASE("band-dump prints the layout header and one line per band") {
  const CliEnv& e = env();
  const RunResult r = run_cli("band-dump --in " +
                              (e.anomaly_dir / "mA/train/normal/normal_000.wav").string());
  REQUIRE(r.exit_code == 0);
  const auto lines = lines_of(r.output);
  REQUIRE(lines.size() >= 7);
  const auto header = nlohmann::json::parse(lines[0]);
  CHECK(header.at("sample_rate_hz") == 16000);
  CHECK(header.at("n_fft") == 400);
  CHECK(header.at("F") == 201);
  CHECK(header.at("T") == 58); // 0.6 s at 16 kHz, 25 ms window, 10 ms hop
  CHECK(header.at("K") == 6);

  const auto band0 = nlohmann::json::parse(lines[1]);
  CHECK(band0.at("k") == 0);
  CHECK(band0.at("bin_start") == 0);
  CHECK(band0.at("bin_end") == 32);
  CHECK(band0.at("center_freq_hz") == 620.0); // ((0 + 31) / 2) * 40 Hz
  CHECK(band0.at("p").get<double>() == doctest::Approx(620.0 / 8000.0).epsilon(1e-12));

  CHECK(run_cli("band-dump --in /nonexistent.wav").exit_code == 3);
}

TEST_CASE("self-check passes clean and fails under an injected gradient fault") {
  const RunResult ok = run_cli("self-check");
  CHECK(ok.exit_code == 0);
  CHECK(ok.output.find("[ ok ]") != std::string::npos);
  CHECK(ok.output.find("[FAIL]") == std::string::npos);
  CHECK(ok.output.find("self-check:") != std::string::npos);

  const RunResult bad = run_cli("self-check --inject-gradient-fault");
  CHECK(bad.exit_code == 5);
  CHECK(bad.output.find("[FAIL]") != std::string::npos);
}
