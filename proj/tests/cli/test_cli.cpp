#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "phaseref/core.hpp"
#include "phaseref/dataio.hpp"

using namespace phaseref;
namespace fs = std::filesystem;

namespace {

const std::string kCli = PHASEREF_CLI_PATH;

int run(const std::string& args) {
    const std::string cmd = kCli + " " + args + " >/dev/null 2>&1";
    const int rc = std::system(cmd.c_str());
    REQUIRE(rc != -1);
    return WEXITSTATUS(rc);
}

fs::path temp_dir(const std::string& tag) {
    const fs::path dir = fs::temp_directory_path() / ("phaseref_cli_" + tag);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::vector<std::string> read_lines(const std::string& path) {
    std::ifstream in(path);
    REQUIRE(in.good());
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) lines.push_back(line);
    return lines;
}

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) fields.push_back(field);
    return fields;
}

} // namespace

TEST_CASE("measure writes the expected container and diagnoses bad inputs") {
    const fs::path dir = temp_dir("measure");
    const std::string img = (dir / "zero.pgm").string();
    write_pgm(image_new(4, 0.0), img);

    const std::string out = (dir / "y.prm").string();
    CHECK_EQ(run("measure --image " + img + " --oversample 2 --out " + out), 0);
    const Measurement y = read_measurement(out);
    CHECK_EQ(y.side, 8);
    CHECK_EQ(y.oversampling, 2);
    for (double v : y.data) CHECK_EQ(v, 0.0);

    CHECK_EQ(run("measure --image " + (dir / "absent.pgm").string() + " --out " + out), 2);
    CHECK_EQ(run("measure --image " + img + " --oversample 3 --out " + out), 2);
    fs::remove_all(dir);
}

TEST_CASE("measure folds a reference into the forward model") {
    const fs::path dir = temp_dir("measure_ref");
    const std::string img = (dir / "x.pgm").string();
    const std::string ref = (dir / "u.pgm").string();
    Rng rng(201);
    write_pgm(random_uniform_image(4, rng), img, 65535);
    write_pgm(random_uniform_image(4, rng), ref, 65535);

    const std::string plain = (dir / "plain.prm").string();
    const std::string with_ref = (dir / "ref.prm").string();
    CHECK_EQ(run("measure --image " + img + " --oversample 2 --out " + plain), 0);
    CHECK_EQ(run("measure --image " + img + " --reference " + ref + " --oversample 2 --out " +
                 with_ref),
             0);

    const Measurement a = read_measurement(plain);
    const Measurement b = read_measurement(with_ref);
    double diff = 0.0;
    for (size_t i = 0; i < a.data.size(); ++i) diff += std::abs(a.data[i] - b.data[i]);
    CHECK(diff > 1e-3);
    fs::remove_all(dir);
}

TEST_CASE("make-ref is reproducible and validates sizes") {
    const fs::path dir = temp_dir("makeref");
    const std::string first = (dir / "r1.pgm").string();
    const std::string second = (dir / "r2.pgm").string();

    CHECK_EQ(run("make-ref --kind simple --size 16 --seed 4 --out " + first), 0);
    CHECK_EQ(run("make-ref --kind simple --size 16 --seed 4 --out " + second), 0);
    CHECK(read_file_bytes(first) == read_file_bytes(second));

    const Image simple = read_pgm(first);
    for (double v : simple.data) CHECK((v == 0.0 || v == 1.0));

    const std::string binary = (dir / "bin.pgm").string();
    CHECK_EQ(run("make-ref --kind binary --size 16 --seed 4 --out " + binary), 0);
    for (double v : read_pgm(binary).data) CHECK((v == 0.0 || v == 1.0));

    const std::string uniform = (dir / "uni.pgm").string();
    CHECK_EQ(run("make-ref --kind random --size 16 --seed 4 --out " + uniform), 0);
    double lo = 1.0, hi = 0.0;
    for (double v : read_pgm(uniform).data) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    CHECK(lo >= 0.0);
    CHECK(hi <= 1.0);
    CHECK(hi - lo > 0.5); // spans much of the range

    CHECK_EQ(run("make-ref --kind simple --size 2 --seed 1 --out " + first), 2);
    CHECK_EQ(run("make-ref --kind nosuch --size 16 --seed 1 --out " + first), 2);
    fs::remove_all(dir);
}

TEST_CASE("make-data emits loadable IDX in plain and gzip forms") {
    const fs::path dir = temp_dir("makedata");
    const std::string plain = (dir / "d.idx").string();
    const std::string zipped = (dir / "d.idx.gz").string();

    CHECK_EQ(run("make-data --count 3 --side 16 --seed 1 --out " + plain), 0);
    CHECK_EQ(run("make-data --count 3 --side 16 --seed 1 --out " + zipped), 0);

    const IdxDataset a = load_idx_file(plain);
    const IdxDataset b = load_idx_file(zipped);
    REQUIRE_EQ(a.items.size(), 3u);
    CHECK_EQ(a.rows, 16);
    REQUIRE_EQ(b.items.size(), 3u);
    for (size_t i = 0; i < a.items.size(); ++i)
        for (size_t j = 0; j < a.items[i].data.size(); ++j)
            CHECK_EQ(a.items[i].data[j], b.items[i].data[j]);

    CHECK_EQ(run("make-data --count 0 --side 16 --seed 1 --out " + plain), 2);
    fs::remove_all(dir);
}

TEST_CASE("train-ref writes the checkpoint trio and a well-formed history") {
    const fs::path dir = temp_dir("train");
    const std::string data = (dir / "d.idx").string();
    REQUIRE_EQ(run("make-data --count 10 --side 12 --seed 2 --out " + data), 0);

    const std::string ck = (dir / "ck").string();
    CHECK_EQ(run("train-ref --data " + data + " --n-train 10" +
                 " --unroll 2 --batch 2 --lr 0.01 --steps 2 --oversample 2 --seed 1 --out " + ck),
             0);
    CHECK(fs::exists(ck + ".pgm"));
    CHECK(fs::exists(ck + ".json"));

    const std::vector<std::string> lines = read_lines(ck + "_history.csv");
    REQUIRE_EQ(lines.size(), 4u); // header + step 0 + 2 Adam steps
    CHECK_EQ(lines[0], "step,train_mse,val_mse");
    const std::vector<std::string> step0 = split_csv(lines[1]);
    REQUIRE_EQ(step0.size(), 3u);
    CHECK_EQ(step0[0], "0");
    CHECK_EQ(step0[1], ""); // no training loss before the first batch
    CHECK(!step0[2].empty());
    const std::vector<std::string> step2 = split_csv(lines[3]);
    CHECK_EQ(step2[0], "2");
    CHECK(std::stod(step2[1]) >= 0.0);

    // The reference itself lands in [0,1] at 16-bit depth.
    const Image ref = read_pgm(ck + ".pgm");
    CHECK_EQ(ref.side, 12);
    for (double v : ref.data) {
        CHECK(v >= 0.0);
        CHECK(v <= 1.0);
    }

    CHECK_EQ(run("train-ref --data " + data + " --n-train 0 --out " + ck), 2);
    CHECK_EQ(run("train-ref --data " + (dir / "absent.idx").string() + " --out " + ck), 2);
    fs::remove_all(dir);
}

TEST_CASE("evaluate tabulates per-method rows and consumes checkpoints") {
    const fs::path dir = temp_dir("evaluate");
    const std::string data = (dir / "d.idx").string();
    REQUIRE_EQ(run("make-data --count 6 --side 12 --seed 3 --out " + data), 0);
    const std::string ck = (dir / "ck").string();
    REQUIRE_EQ(run("train-ref --data " + data + " --n-train 6" +
                   " --unroll 2 --batch 2 --steps 1 --oversample 2 --seed 1 --out " + ck),
               0);

    const std::string out = (dir / "ev").string();
    CHECK_EQ(run("evaluate --data " + data + " --n-test 2 --methods none,learned:" + ck +
                 ".json --solver gs --steps 5 --oversample 2 --seed 5 --out-dir " + out),
             0);

    const std::vector<std::string> lines = read_lines(out + "/metrics.csv");
    REQUIRE_EQ(lines.size(), 3u);
    CHECK_EQ(lines[0], "dataset,method,oversampling,mse_mean,mse_stddev,n_images,seed");
    const std::vector<std::string> none_row = split_csv(lines[1]);
    REQUIRE_EQ(none_row.size(), 7u);
    CHECK_EQ(none_row[0], "d");
    CHECK_EQ(none_row[1], "none");
    CHECK_EQ(none_row[2], "2");
    CHECK_EQ(none_row[5], "2");
    CHECK_EQ(none_row[6], "5");
    CHECK_EQ(split_csv(lines[2])[1], "learned:" + ck + ".json");

    // Reconstructions and reference dumps land beside the table.
    CHECK(fs::exists(out + "/recon_none_s2_i0.pgm"));

    // A single test image has zero spread.
    const std::string single = (dir / "one").string();
    CHECK_EQ(run("evaluate --data " + data +
                 " --n-test 1 --methods none --solver gd --steps 5 --oversample 2 --seed 5 "
                 "--out-dir " +
                 single),
             0);
    const std::vector<std::string> one = read_lines(single + "/metrics.csv");
    REQUIRE_EQ(one.size(), 2u);
    CHECK_EQ(split_csv(one[1])[4], "0");

    // Bad method tokens and missing checkpoints fail before any output.
    const std::string never = (dir / "never").string();
    CHECK_EQ(run("evaluate --data " + data + " --n-test 1 --methods nosuch --out-dir " + never),
             2);
    CHECK(!fs::exists(never));
    CHECK_EQ(run("evaluate --data " + data + " --n-test 1 --methods learned:" +
                 (dir / "ghost.json").string() + " --out-dir " + never),
             2);
    CHECK(!fs::exists(never));
    CHECK_EQ(run("evaluate --data " + data + " --n-test 99 --methods none --out-dir " + never),
             2);
    fs::remove_all(dir);
}

TEST_CASE("gradcheck exit codes reflect the verdict") {
    CHECK_EQ(run("gradcheck --trials 4 --sizes 4 --unrolls 1,2 --oversamples 2 --seed 3"), 0);
    CHECK_EQ(run("gradcheck --trials 2 --sizes 4 --unrolls 1 --oversamples 2 --seed 3 "
                 "--corrupt-vjp 0.5"),
             1);
    CHECK_EQ(run("gradcheck --trials 0 --sizes 4 --unrolls 1 --oversamples 2"), 0);
}

TEST_CASE("usage errors exit with status 2") {
    CHECK_EQ(run(""), 2);                      // a subcommand is required
    CHECK_EQ(run("measure --nope"), 2);        // unknown flag
    CHECK_EQ(run("no-such-subcommand"), 2);    // unknown subcommand
    CHECK_EQ(run("make-ref --kind random"), 2); // missing required options
}

TEST_CASE("a JSON config supplies options that explicit flags override") {
    const fs::path dir = temp_dir("config");
    const std::string img = (dir / "x.pgm").string();
    Rng rng(202);
    write_pgm(random_uniform_image(4, rng), img, 65535);

    const std::string cfg = (dir / "run.json").string();
    const std::string cfg_out = (dir / "from_config.prm").string();
    {
        std::ofstream out(cfg);
        out << "{\n  \"measure\": {\n    \"image\": \"" << img << "\",\n    \"oversample\": 2,\n"
            << "    \"out\": \"" << cfg_out << "\"\n  }\n}\n";
    }

    CHECK_EQ(run("measure --config " + cfg), 0);
    const std::string flag_out = (dir / "from_flags.prm").string();
    CHECK_EQ(run("measure --image " + img + " --oversample 2 --out " + flag_out), 0);
    CHECK(read_file_bytes(cfg_out) == read_file_bytes(flag_out));

    // An explicit flag wins over the config value.
    const std::string override_out = (dir / "override.prm").string();
    CHECK_EQ(run("measure --config " + cfg + " --out " + override_out), 0);
    CHECK(fs::exists(override_out));
    const Measurement y = read_measurement(override_out);
    CHECK_EQ(y.oversampling, 2);

    // Invalid JSON is a usage error.
    const std::string broken = (dir / "broken.json").string();
    write_file_bytes(broken, {'{', 'o', 'o', 'p', 's'});
    CHECK_EQ(run("measure --config " + broken), 2);
    fs::remove_all(dir);
}
