#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "ptav/bench.hpp"
#include "ptav/synth.hpp"

using namespace ptav;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() / ("ptav_cli_" + std::to_string(std::random_device{}()));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

int run_cli(const std::string& args) {
    const std::string cmd = std::string(PTAV_CLI_PATH) + " " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WEXITSTATUS(status);
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// a small tracked scene written through the synth pipeline
void write_test_sequence(const fs::path& dir, int frames = 20) {
    SynthScript s;
    s.canvas_w = 160;
    s.canvas_h = 100;
    s.frames = frames;
    s.target = Box{20, 40, 18, 18};
    SynthEvent tr{SynthEventType::kTranslate};
    tr.start = 1;
    tr.end = frames - 1;
    tr.vx = 2.0;
    tr.vy = 0.0;
    s.events.push_back(tr);
    save_sequence(synth_generate(s, 5), dir.string());
}

}  // namespace

TEST_CASE("track writes one results line per frame and honors lockstep determinism") {
    TempDir tmp;
    const fs::path seq = tmp.path / "seq";
    write_test_sequence(seq);

    const fs::path out1 = tmp.path / "out1", out2 = tmp.path / "out2";
    REQUIRE(run_cli("track --seq " + seq.string() + " --mode lockstep --seed 7 --trace --out " +
                    out1.string()) == 0);
    REQUIRE(run_cli("track --seq " + seq.string() + " --mode lockstep --seed 7 --trace --out " +
                    out2.string()) == 0);

    const std::vector<Box> results = load_results((out1 / "results.txt").string());
    REQUIRE(results.size() == 20);
    // byte-identical outputs across invocations
    REQUIRE(slurp(out1 / "results.txt") == slurp(out2 / "results.txt"));
    REQUIRE(slurp(out1 / "trace.log") == slurp(out2 / "trace.log"));
    REQUIRE_FALSE(slurp(out1 / "trace.log").empty());
}

TEST_CASE("track rejects a bad config key with exit 3 and no output") {
    TempDir tmp;
    const fs::path seq = tmp.path / "seq";
    write_test_sequence(seq, 4);
    const fs::path cfg = tmp.path / "bad.cfg";
    std::ofstream(cfg) << "tracker.bogus = 1\n";
    const fs::path out = tmp.path / "out";
    REQUIRE(run_cli("track --seq " + seq.string() + " --config " + cfg.string() + " --out " +
                    out.string()) == 3);
    REQUIRE_FALSE(fs::exists(out / "results.txt"));
}

TEST_CASE("track without ground truth is a sequence error") {
    TempDir tmp;
    const fs::path seq = tmp.path / "seq";
    write_test_sequence(seq, 4);
    fs::remove(seq / "groundtruth_rect.txt");
    REQUIRE(run_cli("track --seq " + seq.string() + " --out " + (tmp.path / "o").string()) == 2);
}

TEST_CASE("annotating writes one frame image per frame") {
    TempDir tmp;
    const fs::path seq = tmp.path / "seq";
    write_test_sequence(seq, 6);
    const fs::path out = tmp.path / "out";
    REQUIRE(run_cli("track --seq " + seq.string() + " --mode lockstep --annotate --out " +
                    out.string()) == 0);
    size_t n = 0;
    for (const auto& e : fs::directory_iterator(out / "annotated")) {
        (void)e;
        ++n;
    }
    REQUIRE(n == 6);
}

TEST_CASE("eval reports perfect metrics for ground truth as results") {
    TempDir tmp;
    const fs::path seq = tmp.path / "seq";
    write_test_sequence(seq, 8);
    const Sequence loaded = load_sequence(seq.string());
    const fs::path results = tmp.path / "results.txt";
    save_results(results.string(), loaded.ground_truth());

    const fs::path out = tmp.path / "eval";
    REQUIRE(run_cli("eval --results " + results.string() + " --seq " + seq.string() + " --out " +
                    out.string()) == 0);
    const std::string metrics = slurp(out / "metrics.txt");
    REQUIRE(metrics.find("dpr20 = 1.000000") != std::string::npos);
    REQUIRE(metrics.find("osr50 = 1.000000") != std::string::npos);

    // csv row counts equal the sample counts
    std::istringstream prec(slurp(out / "precision.csv"));
    std::string line;
    int rows = -1;  // discount header
    while (std::getline(prec, line))
        if (!line.empty()) ++rows;
    REQUIRE(rows == 51);
    std::istringstream succ(slurp(out / "success.csv"));
    rows = -1;
    while (std::getline(succ, line))
        if (!line.empty()) ++rows;
    REQUIRE(rows == 101);
    REQUIRE(slurp(out / "precision.svg").find("</svg>") != std::string::npos);
}

TEST_CASE("eval overlays multiple result files in one plot") {
    TempDir tmp;
    const fs::path seq = tmp.path / "seq";
    write_test_sequence(seq, 8);
    const Sequence loaded = load_sequence(seq.string());
    const fs::path r1 = tmp.path / "perfect.txt";
    save_results(r1.string(), loaded.ground_truth());
    std::vector<Box> shifted = loaded.ground_truth();
    for (Box& b : shifted) b.x += 30.0;
    const fs::path r2 = tmp.path / "shifted.txt";
    save_results(r2.string(), shifted);

    const fs::path out = tmp.path / "eval2";
    REQUIRE(run_cli("eval --results " + r1.string() + " --results " + r2.string() + " --seq " +
                    seq.string() + " --out " + out.string()) == 0);
    const std::string svg = slurp(out / "precision.svg");
    REQUIRE(svg.find("perfect") != std::string::npos);
    REQUIRE(svg.find("shifted") != std::string::npos);
    // two polylines, one per run
    size_t count = 0, pos = 0;
    while ((pos = svg.find("<polyline", pos)) != std::string::npos) {
        ++count;
        pos += 9;
    }
    REQUIRE(count == 2);
}

TEST_CASE("synth generates loadable sequences deterministically") {
    TempDir tmp;
    const fs::path script = tmp.path / "scene.txt";
    std::ofstream(script) << "canvas_w = 120\ncanvas_h = 90\nframes = 6\ntarget = 20,30,16,16\n"
                          << "event: span=1..5 type=translate vx=3 vy=0\n";
    const fs::path a = tmp.path / "a", b = tmp.path / "b";
    REQUIRE(run_cli("synth --script " + script.string() + " --seed 9 --out " + a.string()) == 0);
    REQUIRE(run_cli("synth --script " + script.string() + " --seed 9 --out " + b.string()) == 0);

    const Sequence sa = load_sequence(a.string());
    REQUIRE(sa.size() == 6);
    REQUIRE(sa.has_ground_truth());
    REQUIRE(sa.ground_truth()[5].x == Catch::Approx(35.0));
    // identical bytes for a fixed seed
    REQUIRE(slurp(a / "img" / "0001.ppm") == slurp(b / "img" / "0001.ppm"));
    REQUIRE(slurp(a / "groundtruth_rect.txt") == slurp(b / "groundtruth_rect.txt"));
}

TEST_CASE("a malformed synth script exits with code 3") {
    TempDir tmp;
    const fs::path script = tmp.path / "bad.txt";
    std::ofstream(script) << "unknown_key = 1\n";
    REQUIRE(run_cli("synth --script " + script.string() + " --out " +
                    (tmp.path / "x").string()) == 3);
}

TEST_CASE("compare writes one row per config and sequence") {
    TempDir tmp;
    const fs::path seq = tmp.path / "seq";
    write_test_sequence(seq, 12);
    const fs::path cfg1 = tmp.path / "five.cfg";
    std::ofstream(cfg1) << "runtime.n_int = 5\nruntime.mode = lockstep\n";
    const fs::path cfg2 = tmp.path / "ten.cfg";
    std::ofstream(cfg2) << "runtime.n_int = 10\nruntime.mode = lockstep\n";

    const fs::path out = tmp.path / "cmp";
    REQUIRE(run_cli("compare --config " + cfg1.string() + " --config " + cfg2.string() +
                    " --seq " + seq.string() + " --out " + out.string()) == 0);
    const std::string csv = slurp(out / "compare.csv");
    std::istringstream ss(csv);
    std::string line;
    std::vector<std::string> rows;
    while (std::getline(ss, line))
        if (!line.empty()) rows.push_back(line);
    REQUIRE(rows.size() == 3);  // header + one row per config
    REQUIRE(rows[1].rfind("five,", 0) == 0);
    REQUIRE(rows[2].rfind("ten,", 0) == 0);
}

TEST_CASE("identical compare configs in lockstep produce identical accuracy columns") {
    TempDir tmp;
    const fs::path seq = tmp.path / "seq";
    write_test_sequence(seq, 12);
    const fs::path cfg1 = tmp.path / "a.cfg";
    std::ofstream(cfg1) << "runtime.n_int = 5\nruntime.mode = lockstep\nseed = 3\n";
    const fs::path cfg2 = tmp.path / "b.cfg";
    std::ofstream(cfg2) << "runtime.n_int = 5\nruntime.mode = lockstep\nseed = 3\n";

    const fs::path out = tmp.path / "cmp";
    REQUIRE(run_cli("compare --config " + cfg1.string() + " --config " + cfg2.string() +
                    " --seq " + seq.string() + " --out " + out.string()) == 0);
    std::istringstream ss(slurp(out / "compare.csv"));
    std::string header, row_a, row_b;
    std::getline(ss, header);
    std::getline(ss, row_a);
    std::getline(ss, row_b);
    // strip config name and fps (last column); accuracy columns must match
    const auto accuracy = [](const std::string& row) {
        const size_t first = row.find(',');
        const size_t last = row.rfind(',');
        return row.substr(first, last - first);
    };
    REQUIRE(accuracy(row_a) == accuracy(row_b));
}

TEST_CASE("compare without config files produces a single default row") {
    TempDir tmp;
    const fs::path seq = tmp.path / "seq";
    write_test_sequence(seq, 8);
    const fs::path out = tmp.path / "cmp";
    REQUIRE(run_cli("compare --seq " + seq.string() + " --mode lockstep --n-int 5 --out " +
                    out.string()) == 0);
    std::istringstream ss(slurp(out / "compare.csv"));
    std::string line;
    std::vector<std::string> rows;
    while (std::getline(ss, line))
        if (!line.empty()) rows.push_back(line);
    REQUIRE(rows.size() == 2);  // header + one row
    REQUIRE(rows[1].rfind("default,", 0) == 0);
}
