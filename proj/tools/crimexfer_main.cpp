// crimexfer: synthetic families, single training runs, the transfer experiment matrix and
// the gradient check, from one binary. Exit codes: 0 ok, 1 usage, 2 data, 3 numeric.

#include "crimexfer/config_json.hpp"
#include "crimexfer/error.hpp"
#include "crimexfer/evaluation.hpp"
#include "crimexfer/gradcheck.hpp"
#include "crimexfer/ingest.hpp"
#include "crimexfer/synthgen.hpp"
#include "crimexfer/weights_io.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <thread>

namespace fs = std::filesystem;
using nlohmann::json;
using namespace crimexfer;

namespace {

constexpr const char* kConfigEnv = "CRIMEXFER_CONFIG";

class UsageError : public Error {
public:
    explicit UsageError(const std::string& what) : Error(ErrorKind::Usage, what) {}
};

struct RunConfig {
    json raw = json::object(); // the configuration document as read
    fs::path base_dir;         // relative ingest paths resolve against this
    TrainConfig train;
    nn::ArchitectureDescriptor arch;
    synth::FamilyParams family;
    CrimeClass crime_class = CrimeClass::Property;
    std::vector<int> ks{1, 2, 3, 4, 5, 6, 7};
    std::vector<YearMonth> test_months;
    std::uint64_t seed = 1;
    std::size_t workers = 0;
};

json read_json_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw IoError("cannot read " + p.string());
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw DataError(p.string() + ": " + e.what());
    }
}

void write_text(const fs::path& p, const std::string& text) {
    std::ofstream out(p, std::ios::binary);
    if (!out) throw IoError("cannot write " + p.string());
    out << text;
    if (!out.flush()) throw IoError("write failed: " + p.string());
}

void make_dir(const fs::path& p) {
    std::error_code ec;
    fs::create_directories(p, ec);
    if (ec) throw IoError("cannot create " + p.string() + ": " + ec.message());
}

RunConfig load_run_config(const std::string& flag_path) {
    RunConfig rc;
    std::string path = flag_path;
    if (path.empty())
        if (const char* env = std::getenv(kConfigEnv)) path = env;
    if (path.empty()) return rc;
    rc.raw = read_json_file(path);
    rc.base_dir = fs::path(path).parent_path();
    if (rc.raw.contains("train")) rc.train = train_config_from_json(rc.raw["train"], rc.train);
    if (rc.raw.contains("architecture")) rc.arch = architecture_from_json(rc.raw["architecture"], rc.arch);
    if (rc.raw.contains("synth")) rc.family = rc.raw["synth"].get<synth::FamilyParams>();
    if (rc.raw.contains("experiment")) {
        const auto& e = rc.raw["experiment"];
        try {
            if (e.contains("crime_class")) rc.crime_class = parse_crime_class(e["crime_class"].get<std::string>());
            if (e.contains("ks")) rc.ks = e["ks"].get<std::vector<int>>();
            if (e.contains("test_months"))
                for (const auto& m : e["test_months"]) rc.test_months.push_back(YearMonth::parse(m.get<std::string>()));
            rc.seed = e.value("seed", rc.seed);
            rc.workers = e.value("workers", rc.workers);
        } catch (const json::exception& ex) {
            throw DataError(std::string("bad experiment configuration: ") + ex.what());
        }
    }
    return rc;
}

json effective_config(const RunConfig& rc) {
    json months = json::array();
    for (const auto& m : rc.test_months) months.push_back(m.str());
    return {{"train", train_config_to_json(rc.train)},
            {"architecture", rc.arch},
            {"synth", rc.family},
            {"experiment",
             {{"crime_class", std::string(to_string(rc.crime_class))},
              {"ks", rc.ks},
              {"test_months", months},
              {"seed", rc.seed},
              {"workers", rc.workers}}}};
}

std::string hex32(std::uint32_t v) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%08x", v);
    return buf;
}

// Options shared by the commands that train.
struct TrainFlags {
    std::optional<std::size_t> batch_size;
    std::optional<int> max_epochs;
    std::optional<int> patience;
    std::vector<double> lr;
    std::optional<int> lookback;

    void attach(CLI::App* cmd) {
        cmd->add_option("--batch-size", batch_size, "Mini-batch size");
        cmd->add_option("--max-epochs", max_epochs, "Epoch limit per learning rate");
        cmd->add_option("--patience", patience, "Early-stopping patience in epochs");
        cmd->add_option("--lr", lr, "Learning-rate grid (repeatable)");
        cmd->add_option("--lookback", lookback, "Look-back days T");
    }
    void apply(RunConfig& rc) const {
        if (batch_size) rc.train.batch_size = *batch_size;
        if (max_epochs) rc.train.max_epochs = *max_epochs;
        if (patience) rc.train.patience = *patience;
        if (!lr.empty()) rc.train.lr_grid = lr;
        if (lookback) rc.arch.lookback_days = *lookback;
        rc.train.validate();
        rc.arch.validate();
    }
};

CrimeClass crime_class_flag(const std::string& text, CrimeClass fallback) {
    if (text.empty()) return fallback;
    try {
        return parse_crime_class(text);
    } catch (const DataError& e) {
        throw UsageError(e.what());
    }
}

YearMonth month_flag(const std::string& text) {
    try {
        return YearMonth::parse(text);
    } catch (const DataError& e) {
        throw UsageError(e.what());
    }
}

void print_warnings(const std::vector<std::string>& warnings, const std::string& prefix) {
    constexpr std::size_t kShown = 5;
    for (std::size_t i = 0; i < warnings.size() && i < kShown; ++i) std::cerr << prefix << "warning: " << warnings[i] << '\n';
    if (warnings.size() > kShown) std::cerr << prefix << "(" << warnings.size() - kShown << " more warnings)\n";
}

// ---------------------------------------------------------------- synth

int cmd_synth(const RunConfig& base, std::uint64_t seed, std::optional<int> cities, std::optional<int> tracts,
              std::optional<int> months, const fs::path& out) {
    RunConfig rc = base;
    if (cities) rc.family.n_cities = *cities;
    if (tracts) rc.family.tracts = *tracts;
    if (months) rc.family.months = *months;
    if (rc.family.n_cities < 2) throw UsageError("a family needs at least two cities (--cities >= 2)");
    const auto family = synth::generate_family(rc.family, seed);
    make_dir(out);
    const fs::path manifest = synth::write_family(family, out);
    std::cout << manifest.string() << '\n';
    return 0;
}

// ---------------------------------------------------------------- train

Loaded<CityDataset> load_training_city(const RunConfig& rc, const std::string& city_dir) {
    if (!city_dir.empty()) return load_city_dir(city_dir);
    if (!rc.raw.contains("ingest")) throw UsageError("give --city or an `ingest` section in the configuration");
    IngestConfig ic = ingest_config_from_json(rc.raw.dump(), rc.base_dir);
    const std::string name = rc.raw["ingest"].value("city_name", std::string("city"));
    return load_city(name, ic);
}

int cmd_train(RunConfig rc, const std::string& city_dir, const std::string& month_text, int k,
              const std::string& init_path, const fs::path& out, std::optional<std::uint64_t> seed) {
    const YearMonth month = month_flag(month_text);
    if (seed) rc.train.seed = *seed;
    auto loaded = load_training_city(rc, city_dir);
    print_warnings(loaded.warnings, "");
    auto ds = std::make_shared<const CityDataset>(std::move(loaded.items.front()));
    require_valid(*ds);
    const PreparedCity city(ds, rc.crime_class);
    const SplitWindows splits = make_splits(month, k, ds->period);

    std::optional<nn::WeightsFile> init;
    if (!init_path.empty()) init = nn::load_params(init_path, rc.arch);
    const TrainedModel model =
        init ? train_model(city, splits, rc.train, init->params) : train_model(city, splits, rc.train, rc.arch);
    const PredictionSet preds = predict_month(model, city, month);
    print_warnings(preds.warnings, "");
    const MonthlyF1 f1 = f1_month(preds, city.labels(), month);

    make_dir(out);
    nn::save_params(model.params, out / "weights.json", model.stats);
    {
        std::ostringstream h;
        write_history_csv(h, model.history);
        write_text(out / "history.csv", h.str());
    }
    {
        std::ostringstream p;
        p << "tract_id,date,probability,label,truth\n";
        p.precision(17);
        for (const auto& e : preds.entries)
            p << ds->tracts[e.tract].id << ',' << e.date.iso() << ',' << e.probability << ',' << int(e.label) << ','
              << int(city.labels().at(e.tract, e.date)) << '\n';
        write_text(out / "predictions.csv", p.str());
    }
    json m;
    m["command"] = "train";
    m["config"] = effective_config(rc);
    m["city"] = {{"name", ds->city_name}, {"checksum", hex32(dataset_checksum(*ds))}};
    m["test_month"] = month.str();
    m["months"] = k;
    m["mode"] = init ? "fine_tune" : "from_seed";
    if (init) m["init"] = {{"path", init_path}, {"checksum", hex32(nn::params_checksum(init->params))}};
    m["windows"] = {{"train", {splits.train.first.iso(), splits.train.last.iso()}},
                    {"validation", {splits.validation.first.iso(), splits.validation.last.iso()}}};
    m["chosen_lr"] = model.chosen_lr;
    m["chosen_epoch"] = model.chosen_epoch;
    m["best_val_f1"] = model.best_val_f1;
    m["test_f1"] = f1.f1;
    m["test_confusion"] = {{"tp", f1.counts.tp}, {"fp", f1.counts.fp}, {"fn", f1.counts.fn}, {"tn", f1.counts.tn}};
    m["weights_checksum"] = hex32(nn::params_checksum(model.params));
    write_text(out / "manifest.json", m.dump(2) + "\n");
    std::cout << "test F1 " << month.str() << " = " << f1.f1 << " (lr " << model.chosen_lr << ", epoch "
              << model.chosen_epoch << ")\n"
              << (out / "manifest.json").string() << '\n';
    return 0;
}

// ---------------------------------------------------------------- experiment

int cmd_experiment(RunConfig rc, const fs::path& family_dir, const std::vector<std::string>& targets,
                   const fs::path& out, bool quiet) {
    const auto family = synth::load_family(family_dir);
    for (const auto& c : family) require_valid(*c);
    MatrixOptions opts;
    opts.ks = rc.ks;
    opts.test_months = rc.test_months;
    opts.targets = targets;
    opts.train = rc.train;
    opts.arch = rc.arch;
    opts.seed = rc.seed;
    opts.workers = rc.workers;
    const auto t0 = std::chrono::steady_clock::now();
    if (!quiet)
        opts.progress = [&](const std::string& msg) {
            const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
            std::cerr << '[' << static_cast<long>(s) << "s] " << msg << '\n';
        };
    const MatrixResult result = run_matrix(family, rc.crime_class, opts);
    const auto files = emit_report(result, out);

    // The report manifest records the matrix; add the invocation around it.
    json manifest = read_json_file(out / "manifest.json");
    manifest["command"] = "experiment";
    manifest["family_dir"] = family_dir.string();
    manifest["config"] = effective_config(rc);
    manifest["elapsed_seconds"] =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    write_text(out / "manifest.json", manifest.dump(2) + "\n");

    for (const auto& row : relative_change_table(result.results))
        if (row.variant == kVotingVariant) {
            std::cout << row.target << " Voting k=" << row.k << ": ";
            if (row.rel_change_pct) std::cout << *row.rel_change_pct << "%\n";
            else std::cout << "undefined (baseline F1 = 0)\n";
        }
    for (const auto& f : files) std::cout << f.string() << '\n';
    return 0;
}

// ---------------------------------------------------------------- gradcheck

int cmd_gradcheck(std::uint64_t seed, int archs, double tolerance) {
    nn::GradcheckOptions o;
    o.seed = seed;
    o.random_architectures = archs;
    const auto report = nn::run_gradcheck(o);
    for (std::size_t a = 0; a < report.architectures.size(); ++a) {
        const auto& ac = report.architectures[a];
        std::cout << "architecture #" << a << ": " << ac.desc.summary() << '\n';
        for (const auto& t : ac.tensors)
            std::cout << "  " << t.name << ": max rel error " << t.max_rel_error << " over " << t.checked
                      << " coords (" << t.skipped << " skipped at ReLU kinks)\n";
    }
    std::cout << "max relative error " << report.max_rel_error << " at " << report.worst << '\n';
    if (!report.passed(tolerance)) {
        std::cerr << "gradient check FAILED: worst coordinate " << report.worst << " exceeds " << tolerance << '\n';
        return static_cast<int>(ErrorKind::Numeric);
    }
    std::cout << "gradient check passed (tolerance " << tolerance << ")\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"crimexfer: crime hotspot prediction with cross-city transfer learning"};
    app.require_subcommand(1);
    app.fallthrough();
    std::string config_path;
    app.add_option("--config", config_path, std::string("JSON run configuration (default: $") + kConfigEnv + ")");

    auto* synth_cmd = app.add_subcommand("synth", "Generate a synthetic city family");
    std::uint64_t synth_seed = 1;
    std::optional<int> synth_cities, synth_tracts, synth_months;
    std::string synth_out;
    synth_cmd->add_option("--seed", synth_seed, "Master seed");
    synth_cmd->add_option("--cities", synth_cities, "Number of cities (>= 2)");
    synth_cmd->add_option("--tracts", synth_tracts, "Tracts per city");
    synth_cmd->add_option("--months", synth_months, "Study period length in months");
    synth_cmd->add_option("--out", synth_out, "Output directory")->required();

    auto* train_cmd = app.add_subcommand("train", "Train one model (baseline, source, or fine-tune with --init)");
    std::string train_city, train_class, train_month, train_init, train_out;
    int train_k = 7;
    std::optional<std::uint64_t> train_seed;
    TrainFlags train_flags;
    train_cmd->add_option("--city", train_city, "City directory with tracts.csv, crimes.csv, od.csv");
    train_cmd->add_option("--crime-class", train_class, "property or violent");
    train_cmd->add_option("--test-month", train_month, "Test month YYYY-MM")->required();
    train_cmd->add_option("--months", train_k, "Months of training data k")->check(CLI::Range(1, 240));
    train_cmd->add_option("--init", train_init, "Weights file to fine-tune from");
    train_cmd->add_option("--out", train_out, "Output directory")->required();
    train_cmd->add_option("--seed", train_seed, "Initialization and shuffling seed");
    train_flags.attach(train_cmd);

    auto* exp_cmd = app.add_subcommand("experiment", "Run the transfer experiment matrix on a family");
    std::string exp_family, exp_class, exp_out;
    std::vector<std::string> exp_targets, exp_months;
    std::vector<int> exp_ks;
    std::optional<std::uint64_t> exp_seed;
    std::optional<std::size_t> exp_workers;
    bool exp_quiet = false;
    TrainFlags exp_flags;
    exp_cmd->add_option("--family", exp_family, "Family directory written by `synth`")->required();
    exp_cmd->add_option("--target", exp_targets, "Restrict to these target cities (repeatable)");
    exp_cmd->add_option("--crime-class", exp_class, "property or violent");
    exp_cmd->add_option("--k", exp_ks, "Scarcity levels (repeatable, default 1..7)")->check(CLI::Range(1, 7));
    exp_cmd->add_option("--test-month", exp_months, "Test months YYYY-MM (repeatable, default: final 5)");
    exp_cmd->add_option("--seed", exp_seed, "Master seed");
    exp_cmd->add_option("--workers", exp_workers, "Parallel jobs (0 = hardware threads)");
    exp_cmd->add_option("--out", exp_out, "Report directory")->required();
    exp_cmd->add_flag("--quiet", exp_quiet, "No per-job progress on stderr");
    exp_flags.attach(exp_cmd);

    auto* grad_cmd = app.add_subcommand("gradcheck", "Finite-difference check of the backward pass");
    std::uint64_t grad_seed = 1;
    int grad_archs = 5;
    double grad_tol = 1e-4;
    grad_cmd->add_option("--seed", grad_seed, "Seed for weights, inputs and random architectures");
    grad_cmd->add_option("--archs", grad_archs, "Random architectures besides the default")->check(CLI::NonNegativeNumber);
    grad_cmd->add_option("--tolerance", grad_tol, "Maximum relative error");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : static_cast<int>(ErrorKind::Usage);
    }

    try {
        if (*grad_cmd) return cmd_gradcheck(grad_seed, grad_archs, grad_tol);
        RunConfig rc = load_run_config(config_path);
        if (*synth_cmd) return cmd_synth(rc, synth_seed, synth_cities, synth_tracts, synth_months, synth_out);
        if (*train_cmd) {
            train_flags.apply(rc);
            rc.crime_class = crime_class_flag(train_class, rc.crime_class);
            return cmd_train(rc, train_city, train_month, train_k, train_init, train_out, train_seed);
        }
        if (*exp_cmd) {
            exp_flags.apply(rc);
            rc.crime_class = crime_class_flag(exp_class, rc.crime_class);
            if (!exp_ks.empty()) rc.ks = exp_ks;
            if (!exp_months.empty()) {
                rc.test_months.clear();
                for (const auto& m : exp_months) rc.test_months.push_back(month_flag(m));
            }
            if (exp_seed) rc.seed = *exp_seed;
            if (exp_workers) rc.workers = *exp_workers;
            return cmd_experiment(rc, exp_family, exp_targets, exp_out, exp_quiet);
        }
    } catch (const ArchitectureMismatch& e) {
        std::cerr << "error: architecture mismatch\n" << e.what() << '\n';
        return static_cast<int>(ErrorKind::Data);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return static_cast<int>(e.kind());
    } catch (const std::bad_alloc&) {
        std::cerr << "error: out of memory\n";
        return static_cast<int>(ErrorKind::Numeric);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return static_cast<int>(ErrorKind::Data);
    }
    return static_cast<int>(ErrorKind::Usage);
}
