// phaseref: reference-based Fourier phase retrieval experiments.
//
// Subcommands: measure, make-ref, train-ref, evaluate, gradcheck, make-data.
// Exit codes: 0 success, 1 check failure (gradcheck above tolerance),
// 2 usage or input error.

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "phaseref/core.hpp"
#include "phaseref/dataio.hpp"
#include "phaseref/measurement.hpp"
#include "phaseref/reconstruct.hpp"
#include "phaseref/references.hpp"
#include "phaseref/reflearn.hpp"
#include "phaseref/registration.hpp"
#include "phaseref/synthdigits.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace phaseref;

namespace {

/// Raised when a check command ran fine but the checked property failed;
/// mapped to exit code 1 (all other errors exit with 2).
struct CheckFailure : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// JSON config files: one object per subcommand name, whose keys are that
/// subcommand's long option names, e.g.
///   { "evaluate": { "data": "digits.idx", "steps": 500 } }
/// Explicit command-line flags always win over config values.
class JsonConfig : public CLI::Config {
  public:
    std::string to_config(const CLI::App* app, bool default_also, bool, std::string) const override {
        return as_json(app, default_also).dump(2) + "\n";
    }

    std::vector<CLI::ConfigItem> from_config(std::istream& input) const override {
        json j;
        try {
            j = json::parse(input);
        } catch (const json::parse_error& e) {
            throw CLI::FileError(std::string("config is not valid JSON: ") + e.what());
        }
        std::vector<CLI::ConfigItem> items;
        collect(j, {}, items);
        return items;
    }

  private:
    static json as_json(const CLI::App* app, bool default_also) {
        json j = json::object();
        for (const CLI::Option* opt : app->get_options({})) {
            if (opt->get_lnames().empty() || !opt->get_configurable()) continue;
            const std::string& name = opt->get_lnames()[0];
            if (opt->count() > 0)
                j[name] =
                    opt->results().size() == 1 ? json(opt->results()[0]) : json(opt->results());
            else if (default_also && !opt->get_default_str().empty())
                j[name] = opt->get_default_str();
        }
        for (const CLI::App* sub : app->get_subcommands(nullptr))
            j[sub->get_name()] = as_json(sub, default_also);
        return j;
    }

    static std::string scalar(const json& v) {
        if (v.is_string()) return v.get<std::string>();
        if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
        return v.dump(); // numbers keep their exact textual form
    }

    static void collect(const json& j, std::vector<std::string> parents,
                        std::vector<CLI::ConfigItem>& out) {
        if (!j.is_object())
            throw CLI::FileError("config: top level must be a JSON object of option values");
        for (auto it = j.begin(); it != j.end(); ++it) {
            if (it.value().is_object()) {
                auto nested = parents;
                nested.push_back(it.key());
                collect(it.value(), std::move(nested), out);
                continue;
            }
            CLI::ConfigItem item;
            item.parents = parents;
            item.name = it.key();
            if (it.value().is_array())
                for (const json& e : it.value()) item.inputs.push_back(scalar(e));
            else
                item.inputs.push_back(scalar(it.value()));
            out.push_back(std::move(item));
        }
    }
};


void ensure_parent_dir(const std::string& path) {
    const fs::path parent = fs::path(path).parent_path();
    if (!parent.empty()) fs::create_directories(parent);
}

std::string fmt(const char* spec, double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), spec, v);
    return buf;
}

// ---------------------------------------------------------------------------
// measure

struct MeasureOpts {
    std::string image;
    std::string reference = "none";
    int oversample = 1;
    std::string out;
};

void run_measure(const MeasureOpts& o) {
    const Image x = read_pgm(o.image);
    Image uimg;
    const Image* u = nullptr;
    if (o.reference != "none") {
        uimg = read_pgm(o.reference);
        u = &uimg;
    }
    const Measurement y = measure(x, u, o.oversample);
    ensure_parent_dir(o.out);
    write_measurement(y, o.out);
    std::printf("measure: wrote %dx%d magnitudes (oversampling %d) to %s\n", y.side, y.side,
                y.oversampling, o.out.c_str());
}

// ---------------------------------------------------------------------------
// make-ref

struct MakeRefOpts {
    std::string kind;
    int size = 0;
    std::uint64_t seed = 0;
    SimpleRefParams simple;
    std::string out;
    std::string png;
};

void run_make_ref(const MakeRefOpts& o) {
    if (o.size < 1) throw std::invalid_argument("make-ref: --size must be >= 1");
    Rng rng(o.seed);
    Image ref;
    if (o.kind == "random") {
        ref = random_reference(o.size, rng);
        std::printf("make-ref: kind=random size=%d seed=%llu\n", o.size,
                    static_cast<unsigned long long>(o.seed));
    } else if (o.kind == "binary") {
        ref = random_binary_reference(o.size, rng);
        std::printf("make-ref: kind=binary size=%d seed=%llu\n", o.size,
                    static_cast<unsigned long long>(o.seed));
    } else if (o.kind == "simple") {
        ref = simple_reference(o.size, o.simple, rng);
        const int square = o.simple.square_side >= 0 ? o.simple.square_side : (o.size + 3) / 4;
        const double sigma = o.simple.sigma >= 0.0 ? o.simple.sigma : o.size / 10.0;
        std::printf("make-ref: kind=simple size=%d seed=%llu square-side=%d sigma=%s "
                    "noise-weight=%s poisson-rate=%s threshold=%s\n",
                    o.size, static_cast<unsigned long long>(o.seed), square,
                    fmt("%g", sigma).c_str(), fmt("%g", o.simple.noise_weight).c_str(),
                    fmt("%g", o.simple.poisson_rate).c_str(),
                    fmt("%g", o.simple.threshold).c_str());
    } else {
        throw std::invalid_argument("make-ref: unknown --kind '" + o.kind +
                                    "' (expected random, binary or simple)");
    }
    ensure_parent_dir(o.out);
    write_pgm(ref, o.out, 65535);
    if (!o.png.empty()) {
        ensure_parent_dir(o.png);
        write_png_gray8(ref, o.png);
    }
    std::printf("make-ref: wrote %s\n", o.out.c_str());
}

// ---------------------------------------------------------------------------
// train-ref

struct TrainRefOpts {
    std::string data;
    int n_train = 100;
    int unroll = 15;
    int batch = 10;
    double lr = 0.01;
    int steps = 50;
    int oversample = 2;
    std::uint64_t seed = 0;
    int val_every = 1;
    bool plateau = false;
    int patience = 10;
    std::string out;
};

void write_history_csv(const std::vector<TrainRecord>& history, const std::string& path) {
    std::string text = "step,train_mse,val_mse\n";
    for (const TrainRecord& r : history) {
        text += std::to_string(r.step);
        text += ',';
        if (std::isfinite(r.train_mse)) text += fmt("%.10g", r.train_mse);
        text += ',';
        if (std::isfinite(r.val_mse)) text += fmt("%.10g", r.val_mse);
        text += '\n';
    }
    write_file_bytes(path, std::vector<std::uint8_t>(text.begin(), text.end()));
}

void run_train_ref(const TrainRefOpts& o) {
    if (o.n_train < 1) throw std::invalid_argument("train-ref: --n-train must be >= 1");
    const std::vector<Image> all = load_dataset(o.data);
    if (static_cast<int>(all.size()) < o.n_train)
        throw std::invalid_argument("train-ref: dataset has " + std::to_string(all.size()) +
                                    " images but --n-train asks for " + std::to_string(o.n_train));
    const std::vector<Image> pool(all.begin(), all.begin() + o.n_train);

    TrainConfig cfg;
    cfg.unroll_steps = o.unroll;
    cfg.batch_size = o.batch;
    cfg.learning_rate = o.lr;
    cfg.max_batches = o.steps;
    cfg.seed = o.seed;
    cfg.oversampling = o.oversample;
    cfg.val_every = o.val_every;
    cfg.plateau_stop = o.plateau;
    cfg.plateau_patience = o.patience;

    std::printf("train-ref: %d train / last %d validation images, unroll %d, batch %d, "
                "lr %s, %d Adam steps, oversampling %d, seed %llu\n",
                o.n_train - std::max(1, o.n_train / 10), std::max(1, o.n_train / 10), o.unroll,
                o.batch, fmt("%g", o.lr).c_str(), o.steps, o.oversample,
                static_cast<unsigned long long>(o.seed));

    const TrainResult res = train_reference(pool, cfg);

    double final_val = std::numeric_limits<double>::quiet_NaN();
    for (const TrainRecord& r : res.history)
        if (std::isfinite(r.val_mse)) final_val = r.val_mse;

    ensure_parent_dir(o.out);
    write_pgm(res.reference, o.out + ".pgm", 65535);
    write_history_csv(res.history, o.out + "_history.csv");

    json meta;
    meta["command"] = "train-ref";
    meta["data"] = o.data;
    meta["n_train"] = o.n_train;
    meta["unroll"] = o.unroll;
    meta["batch"] = o.batch;
    meta["lr"] = o.lr;
    meta["steps"] = o.steps;
    meta["oversample"] = o.oversample;
    meta["seed"] = o.seed;
    meta["val_every"] = o.val_every;
    meta["stop_reason"] = res.stop_reason;
    meta["train_count"] = res.train_count;
    meta["val_count"] = res.val_count;
    meta["adam_steps_taken"] = res.adam.t;
    meta["final_val_mse"] = final_val;
    meta["reference"] = {{"side", res.reference.side}, {"data", res.reference.data}};
    const std::string text = meta.dump(2) + "\n";
    write_file_bytes(o.out + ".json", std::vector<std::uint8_t>(text.begin(), text.end()));

    std::printf("train-ref: stopped after %lld Adam steps (%s), final validation MSE %s\n",
                static_cast<long long>(res.adam.t), res.stop_reason.c_str(),
                fmt("%.6g", final_val).c_str());
    std::printf("train-ref: wrote %s.pgm, %s_history.csv, %s.json\n", o.out.c_str(),
                o.out.c_str(), o.out.c_str());
}

// ---------------------------------------------------------------------------
// evaluate

struct EvalOpts {
    std::string data;
    int n_test = 1000;
    std::string methods = "none,random,binary,simple";
    std::string solver = "gs";
    int steps = 500;
    double step_size = 1.95;
    std::string oversample = "both";
    std::uint64_t seed = 0;
    int jobs = 1;
    std::string out_dir;
    std::string dataset_name;
};

struct MethodSpec {
    enum Kind { kNone, kRandom, kBinary, kSimple, kLearned };
    std::string label;
    Kind kind = kNone;
    Image learned; // loaded up front so bad paths fail before any output
};

std::vector<MethodSpec> parse_methods(const std::string& csv) {
    std::vector<MethodSpec> out;
    size_t pos = 0;
    while (pos <= csv.size()) {
        const size_t comma = csv.find(',', pos);
        const std::string tok =
            csv.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
        pos = comma == std::string::npos ? csv.size() + 1 : comma + 1;
        if (tok.empty()) continue;
        MethodSpec m;
        m.label = tok;
        if (tok == "none") {
            m.kind = MethodSpec::kNone;
        } else if (tok == "random") {
            m.kind = MethodSpec::kRandom;
        } else if (tok == "binary") {
            m.kind = MethodSpec::kBinary;
        } else if (tok == "simple") {
            m.kind = MethodSpec::kSimple;
        } else if (tok.rfind("learned:", 0) == 0) {
            m.kind = MethodSpec::kLearned;
            const std::string path = tok.substr(8);
            if (path.empty())
                throw std::invalid_argument("evaluate: learned: needs a file path");
            if (path.size() > 5 && path.compare(path.size() - 5, 5, ".json") == 0) {
                const auto bytes = read_file_bytes(path);
                json j;
                try {
                    j = json::parse(bytes.begin(), bytes.end());
                } catch (const json::parse_error& e) {
                    throw FormatError("checkpoint " + path + " is not valid JSON: " + e.what());
                }
                try {
                    m.learned = Image(j.at("reference").at("side").get<int>(),
                                      j.at("reference").at("data").get<std::vector<double>>());
                } catch (const json::exception& e) {
                    throw FormatError("checkpoint " + path + " lacks a reference record: " +
                                      e.what());
                }
            } else {
                m.learned = read_pgm(path);
            }
        } else {
            throw std::invalid_argument("evaluate: unknown method '" + tok +
                                        "' (expected none, random, binary, simple or "
                                        "learned:<path>)");
        }
        out.push_back(std::move(m));
    }
    if (out.empty()) throw std::invalid_argument("evaluate: --methods list is empty");
    return out;
}

std::string sanitize_label(const std::string& label) {
    std::string out = label;
    for (char& c : out)
        if (!std::isalnum(static_cast<unsigned char>(c))) c = '_';
    return out;
}

void run_evaluate(const EvalOpts& o) {
    std::vector<MethodSpec> methods = parse_methods(o.methods);
    if (o.solver != "gs" && o.solver != "gd")
        throw std::invalid_argument("evaluate: --solver must be gs or gd");
    if (o.jobs < 1) throw std::invalid_argument("evaluate: --jobs must be >= 1");
    if (o.n_test < 1) throw std::invalid_argument("evaluate: --n-test must be >= 1");

    std::vector<int> factors;
    if (o.oversample == "both")
        factors = {1, 2};
    else if (o.oversample == "1" || o.oversample == "2")
        factors = {o.oversample == "1" ? 1 : 2};
    else
        throw std::invalid_argument("evaluate: --oversample must be 1, 2 or both");

    const std::vector<Image> all = load_dataset(o.data);
    if (static_cast<int>(all.size()) < o.n_test)
        throw std::invalid_argument("evaluate: dataset has " + std::to_string(all.size()) +
                                    " images but --n-test asks for " + std::to_string(o.n_test));
    const std::vector<Image> test(all.begin(), all.begin() + o.n_test);
    const int d = test.front().side;
    const int n = o.n_test;

    for (const MethodSpec& m : methods)
        if (m.kind == MethodSpec::kLearned && m.learned.side != d)
            throw std::invalid_argument("evaluate: learned reference side " +
                                        std::to_string(m.learned.side) +
                                        " does not match dataset side " + std::to_string(d));

    const std::string dataset_name =
        o.dataset_name.empty() ? fs::path(o.data).stem().string() : o.dataset_name;
    const Rng base(o.seed);

    std::vector<MetricsRow> rows;
    std::vector<std::pair<std::string, Image>> dumps; // collected, written at the end

    for (const MethodSpec& m : methods) {
        for (const int s : factors) {
            // One reference per cell, from a stream keyed by method kind and
            // oversampling so rows do not depend on the method list order.
            Image uimg;
            const Image* u = nullptr;
            const std::uint64_t cell_stream = 0xEF00 + std::uint64_t(m.kind) * 16 + std::uint64_t(s);
            Rng cell_rng = base.derive(cell_stream);
            switch (m.kind) {
                case MethodSpec::kNone: break;
                case MethodSpec::kRandom: uimg = random_reference(d, cell_rng); u = &uimg; break;
                case MethodSpec::kBinary:
                    uimg = random_binary_reference(d, cell_rng);
                    u = &uimg;
                    break;
                case MethodSpec::kSimple:
                    uimg = simple_reference(d, SimpleRefParams{}, cell_rng);
                    u = &uimg;
                    break;
                case MethodSpec::kLearned: uimg = m.learned; u = &uimg; break;
            }

            std::vector<double> errs(n, 0.0);
            std::vector<Image> first3(std::min(n, 3));
            const int jobs = std::min(o.jobs, n);
            std::vector<std::exception_ptr> failures(jobs);

            auto worker = [&](int t) {
                try {
                    for (int i = t; i < n; i += jobs) {
                        const Measurement y = measure(test[i], u, s);
                        const std::uint64_t init_seed =
                            base.derive(0xB0000000ULL + std::uint64_t(i)).seed();
                        Image recon;
                        if (o.solver == "gs") {
                            GsConfig cfg;
                            cfg.iterations = o.steps;
                            cfg.oversampling = s;
                            cfg.init_seed = init_seed;
                            recon = gs_run(y, u, cfg);
                        } else {
                            GdConfig cfg;
                            cfg.iterations = o.steps;
                            cfg.step_size = o.step_size;
                            cfg.oversampling = s;
                            cfg.init_seed = init_seed;
                            recon = gd_run(y, u, cfg);
                        }
                        const RegisterResult reg = register_image(recon, test[i]);
                        errs[i] = reg.mse;
                        if (i < 3) first3[i] = reg.aligned;
                    }
                } catch (...) {
                    failures[t] = std::current_exception();
                }
            };

            if (jobs == 1) {
                worker(0);
            } else {
                std::vector<std::thread> pool;
                pool.reserve(jobs);
                for (int t = 0; t < jobs; ++t) pool.emplace_back(worker, t);
                for (std::thread& th : pool) th.join();
            }
            for (const std::exception_ptr& p : failures)
                if (p) std::rethrow_exception(p);

            double mean = 0.0;
            for (double e : errs) mean += e;
            mean /= n;
            double var = 0.0;
            for (double e : errs) var += (e - mean) * (e - mean);
            const double stddev = std::sqrt(var / n);

            rows.push_back({dataset_name, m.label, s, mean, stddev, n, o.seed});
            std::printf("evaluate: method=%s oversampling=%d mse_mean=%s mse_stddev=%s (n=%d)\n",
                        m.label.c_str(), s, format_mse(mean).c_str(), format_mse(stddev).c_str(),
                        n);

            const std::string tag = sanitize_label(m.label) + "_s" + std::to_string(s);
            if (u) dumps.emplace_back("ref_" + tag + ".pgm", *u);
            for (size_t i = 0; i < first3.size(); ++i)
                dumps.emplace_back("recon_" + tag + "_i" + std::to_string(i) + ".pgm", first3[i]);
        }
    }

    fs::create_directories(o.out_dir);
    write_metrics_csv(rows, (fs::path(o.out_dir) / "metrics.csv").string());
    for (const auto& [name, img] : dumps)
        write_pgm(img, (fs::path(o.out_dir) / name).string(), 255);
    std::printf("evaluate: wrote %zu rows to %s/metrics.csv (+%zu image dumps)\n", rows.size(),
                o.out_dir.c_str(), dumps.size());
}

// ---------------------------------------------------------------------------
// gradcheck

struct GradcheckOpts {
    int trials = 50;
    std::vector<int> sizes = {4, 6, 8};
    std::vector<int> unrolls = {1, 2, 3, 5};
    std::vector<int> oversamples = {1, 2};
    std::uint64_t seed = 0;
    double corrupt = 0.0;
};

void run_gradcheck(const GradcheckOpts& o) {
    if (o.trials < 0) throw std::invalid_argument("gradcheck: --trials must be >= 0");
    if (o.trials == 0) {
        std::printf("gradcheck: warning: 0 trials requested, vacuous pass\n");
        return;
    }
    GradCheckConfig cfg;
    cfg.trials = o.trials;
    cfg.sides = o.sizes;
    cfg.unrolls = o.unrolls;
    cfg.oversamplings = o.oversamples;
    cfg.seed = o.seed;
    cfg.corrupt = o.corrupt;
    const GradCheckResult res = run_gradient_check(cfg);
    std::printf("gradcheck: max relative gradient error %s over %d trials (%d kink resamples)\n",
                fmt("%.3g", res.max_rel_error).c_str(), res.trials_run, res.resamples);
    if (res.max_rel_error > 1e-4)
        throw CheckFailure("gradcheck: max relative error " + fmt("%.3g", res.max_rel_error) +
                           " exceeds the 1e-4 tolerance");
}

// ---------------------------------------------------------------------------
// make-data

struct MakeDataOpts {
    int count = 200;
    int side = 28;
    std::uint64_t seed = 0;
    std::string out;
};

void run_make_data(const MakeDataOpts& o) {
    const std::vector<Image> items = synthetic_digits(o.count, o.side, o.seed);
    ensure_parent_dir(o.out);
    write_idx_images(items, o.out);
    std::printf("make-data: wrote %d %dx%d digit glyphs to %s\n", o.count, o.side, o.side,
                o.out.c_str());
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Reference-based Fourier phase retrieval: simulate magnitude measurements, "
                 "reconstruct, and learn reference images through the unrolled solver"};
    app.require_subcommand(1);
    app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
    app.fallthrough(); // lets --config appear after the subcommand name
    app.config_formatter(std::make_shared<JsonConfig>());
    app.set_config("--config", "",
                   "JSON config file with one object per subcommand, keys matching the long "
                   "option names; explicit flags override config values");

    MeasureOpts mo;
    CLI::App* measure_cmd =
        app.add_subcommand("measure", "Simulate a magnitude measurement of image + reference");
    measure_cmd->add_option("--image", mo.image, "Input image (binary PGM)")->required();
    measure_cmd->add_option("--reference", mo.reference,
                            "Reference image (binary PGM), or 'none'")
        ->capture_default_str();
    measure_cmd->add_option("--oversample", mo.oversample, "Oversampling factor")
        ->check(CLI::IsMember({1, 2}))
        ->capture_default_str();
    measure_cmd->add_option("--out", mo.out, "Output measurement file")->required();
    measure_cmd->callback([&mo] { run_measure(mo); });

    MakeRefOpts ro;
    CLI::App* makeref_cmd = app.add_subcommand("make-ref", "Construct a reference image");
    makeref_cmd->add_option("--kind", ro.kind, "random, binary or simple")->required();
    makeref_cmd->add_option("--size", ro.size, "Image side in pixels")->required();
    makeref_cmd->add_option("--seed", ro.seed, "Random seed")->capture_default_str();
    makeref_cmd->add_option("--square-side", ro.simple.square_side,
                            "simple: square side (default ceil(size/4))");
    makeref_cmd->add_option("--sigma", ro.simple.sigma,
                            "simple: Gaussian blur width (default size/10)");
    makeref_cmd->add_option("--noise-weight", ro.simple.noise_weight,
                            "simple: Poisson noise weight")
        ->capture_default_str();
    makeref_cmd->add_option("--poisson-rate", ro.simple.poisson_rate, "simple: Poisson rate")
        ->capture_default_str();
    makeref_cmd->add_option("--threshold", ro.simple.threshold, "simple: binarization threshold")
        ->capture_default_str();
    makeref_cmd->add_option("--out", ro.out, "Output PGM path")->required();
    makeref_cmd->add_option("--png", ro.png, "Optional PNG export path");
    makeref_cmd->callback([&ro] { run_make_ref(ro); });

    TrainRefOpts to;
    CLI::App* train_cmd =
        app.add_subcommand("train-ref", "Learn a reference through the unrolled solver");
    train_cmd->add_option("--data", to.data, "IDX file (optionally .gz) or directory of PGMs")
        ->required();
    train_cmd->add_option("--n-train", to.n_train,
                          "Images taken from the head of the dataset (last 10% of them "
                          "become the validation split)")
        ->capture_default_str();
    train_cmd->add_option("--unroll", to.unroll, "Solver iterations to differentiate through")
        ->capture_default_str();
    train_cmd->add_option("--batch", to.batch, "Images per Adam step")->capture_default_str();
    train_cmd->add_option("--lr", to.lr, "Adam learning rate")->capture_default_str();
    train_cmd->add_option("--steps", to.steps, "Adam steps")->capture_default_str();
    train_cmd->add_option("--oversample", to.oversample, "Oversampling factor")
        ->check(CLI::IsMember({1, 2}))
        ->capture_default_str();
    train_cmd->add_option("--seed", to.seed, "Random seed")->capture_default_str();
    train_cmd->add_option("--val-every", to.val_every, "Validation cadence in Adam steps")
        ->capture_default_str();
    train_cmd->add_flag("--plateau-stop", to.plateau,
                        "Stop early when validation stalls for --patience evaluations");
    train_cmd->add_option("--patience", to.patience, "Plateau patience")->capture_default_str();
    train_cmd->add_option("--out", to.out,
                          "Output prefix: writes <out>.pgm, <out>_history.csv, <out>.json")
        ->required();
    train_cmd->callback([&to] { run_train_ref(to); });

    EvalOpts eo;
    CLI::App* eval_cmd =
        app.add_subcommand("evaluate", "Reconstruct a test set and tabulate registered MSE");
    eval_cmd->add_option("--data", eo.data, "IDX file (optionally .gz) or directory of PGMs")
        ->required();
    eval_cmd->add_option("--n-test", eo.n_test, "Test images taken from the head of the dataset")
        ->capture_default_str();
    eval_cmd->add_option("--methods", eo.methods,
                         "Comma list of none, random, binary, simple, learned:<path>")
        ->capture_default_str();
    eval_cmd->add_option("--solver", eo.solver, "gs (Gerchberg-Saxton) or gd (gradient descent)")
        ->check(CLI::IsMember({"gs", "gd"}))
        ->capture_default_str();
    eval_cmd->add_option("--steps", eo.steps, "Solver iterations")->capture_default_str();
    eval_cmd->add_option("--step-size", eo.step_size, "gd step size")->capture_default_str();
    eval_cmd->add_option("--oversample", eo.oversample, "1, 2 or both")
        ->check(CLI::IsMember({"1", "2", "both"}))
        ->capture_default_str();
    eval_cmd->add_option("--seed", eo.seed, "Random seed")->capture_default_str();
    eval_cmd->add_option("--jobs", eo.jobs, "Worker threads across test images")
        ->capture_default_str();
    eval_cmd->add_option("--out-dir", eo.out_dir, "Output directory for metrics.csv and dumps")
        ->required();
    eval_cmd->add_option("--dataset-name", eo.dataset_name,
                         "Dataset column in metrics.csv (default: data file stem)");
    eval_cmd->callback([&eo] { run_evaluate(eo); });

    GradcheckOpts go;
    CLI::App* grad_cmd = app.add_subcommand(
        "gradcheck", "Compare reference gradients against finite differences");
    grad_cmd->add_option("--trials", go.trials, "Random instances to test")->capture_default_str();
    grad_cmd->add_option("--sizes", go.sizes, "Image sides to cycle through")
        ->delimiter(',')
        ->capture_default_str();
    grad_cmd->add_option("--unrolls", go.unrolls, "Unroll depths to cycle through")
        ->delimiter(',')
        ->capture_default_str();
    grad_cmd->add_option("--oversamples", go.oversamples, "Oversampling factors to cycle through")
        ->delimiter(',')
        ->capture_default_str();
    grad_cmd->add_option("--seed", go.seed, "Random seed")->capture_default_str();
    grad_cmd->add_option("--corrupt-vjp", go.corrupt,
                         "Offset added to one analytic gradient entry (detector self-test)")
        ->group(""); // hidden
    grad_cmd->callback([&go] { run_gradcheck(go); });

    MakeDataOpts do_;
    CLI::App* data_cmd =
        app.add_subcommand("make-data", "Generate a deterministic digit-glyph dataset (IDX)");
    data_cmd->add_option("--count", do_.count, "Number of images")->capture_default_str();
    data_cmd->add_option("--side", do_.side, "Image side in pixels")->capture_default_str();
    data_cmd->add_option("--seed", do_.seed, "Random seed")->capture_default_str();
    data_cmd->add_option("--out", do_.out, "Output IDX path (gzip if it ends in .gz)")
        ->required();
    data_cmd->callback([&do_] { run_make_data(do_); });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    } catch (const CheckFailure& e) {
        std::fprintf(stderr, "%s\n", e.what());
        return 1;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
    return 0;
}
