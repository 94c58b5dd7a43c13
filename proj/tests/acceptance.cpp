// Acceptance runner: one PASS/FAIL line per criterion. `--only a,b` restricts the set.
// Exit status is 0 only when every selected criterion passes.

#include "crimexfer/error.hpp"
#include "crimexfer/evaluation.hpp"
#include "crimexfer/gradcheck.hpp"
#include "crimexfer/ingest.hpp"
#include "crimexfer/synthgen.hpp"
#include "crimexfer/weights_io.hpp"

#include "oracles.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>
#include <thread>

using namespace crimexfer;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Verdict {
    bool pass = false;
    std::string detail;
};

double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

double mean(const std::vector<double>& v) {
    double s = 0;
    for (double x : v) s += x;
    return s / double(v.size());
}

std::string fmt(double v, int prec = 4) {
    std::ostringstream s;
    s.precision(prec);
    s << v;
    return s.str();
}

std::string join(const std::vector<double>& v) {
    std::string out;
    for (double x : v) out += (out.empty() ? "" : " ") + fmt(x, 3);
    return out;
}

bool same_bits(double a, double b) { return std::memcmp(&a, &b, sizeof a) == 0; }

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

// ---------------------------------------------------------------------------

Verdict gradient_correctness() {
    const auto t0 = Clock::now();
    nn::GradcheckOptions o;
    o.seed = 2024;
    o.random_architectures = 5;
    const auto r = nn::run_gradcheck(o);
    const double secs = seconds_since(t0);
    return {r.passed(1e-4) && secs < 60.0,
            "max rel error " + fmt(r.max_rel_error) + " at " + r.worst + " over " +
                std::to_string(r.architectures.size()) + " architectures, " + fmt(secs, 3) + " s"};
}

Verdict feature_oracle() {
    const auto t0 = Clock::now();
    std::size_t cells = 0;
    for (std::uint64_t seed = 1; seed <= 100; ++seed) {
        const CityDataset ds = oracle::random_dataset(seed * 104729 + 7, 50, 30, 1000);
        for (CrimeClass cls : {CrimeClass::Property, CrimeClass::Violent}) {
            const auto b = build_panel(ds, cls);
            for (const auto& t : ds.tracts)
                for (StudyDate d = ds.period.first; d <= ds.period.last; d = d.plus_days(1)) {
                    const std::string diff = oracle::compare_cell(b.panel.at(t.id, d), oracle::count_cell(ds, cls, t.id, d));
                    if (!diff.empty())
                        return {false, "dataset " + std::to_string(seed) + " " + t.id + " " + d.iso() + ": " + diff};
                    ++cells;
                }
        }
    }
    const double secs = seconds_since(t0);
    return {secs < 60.0, std::to_string(cells) + " cells identical on 100 datasets, " + fmt(secs, 3) + " s"};
}

Verdict metric_oracles() {
    CounterRng rng(77);
    const DateRange period{StudyDate(2021, 1, 1), StudyDate(2021, 2, 28)};
    for (int trial = 0; trial < 10000; ++trial) {
        const std::size_t tracts = 1 + rng.below(8);
        HotspotLabels truth(period, tracts);
        const double rate = rng.uniform(0, 1);
        for (std::size_t d = 0; d < std::size_t(period.days()); ++d)
            for (std::size_t t = 0; t < tracts; ++t) truth.at(t, d) = rng.uniform(0, 1) < rate;
        const YearMonth month(2021, 1 + unsigned(trial % 2));
        PredictionSet p;
        p.month = month;
        std::vector<int> pred, actual;
        const double bias = rng.uniform(-0.5, 0.5);
        for (StudyDate d = month.first_day(); d <= month.last_day(); d = d.plus_days(1))
            for (std::size_t t = 0; t < tracts; ++t) {
                const double prob = std::clamp(rng.uniform(0, 1) + bias, 0.0, 1.0);
                const std::uint8_t label = prob >= 0.5;
                p.entries.push_back({t, d, prob, label});
                pred.push_back(label);
                actual.push_back(truth.at(t, d));
            }
        const auto got = f1_month(p, truth, month);
        const auto want = oracle::confusion(pred, actual);
        if (got.counts.tp != want.tp || got.counts.fp != want.fp || got.counts.fn != want.fn ||
            got.counts.tn != want.tn || std::abs(got.f1 - oracle::f1(want)) > 1e-12)
            return {false, "f1_month disagrees with the confusion oracle on trial " + std::to_string(trial)};
    }
    for (int i = 0; i < 10000; ++i) {
        const double a = rng.uniform(0, 1), b = rng.uniform(1e-4, 1);
        const double want = (a / b - 1.0) * 100.0;
        const auto got = relative_change(a, b);
        if (!got || std::abs(*got - want) > 1e-12 * std::max(1.0, std::abs(want)))
            return {false, "relative_change disagrees on (" + fmt(a, 17) + ", " + fmt(b, 17) + ")"};
    }
    for (int mask = 0; mask < 8; ++mask) {
        std::vector<PredictionSet> members(3);
        int ones = 0;
        for (int m = 0; m < 3; ++m) {
            const std::uint8_t v = (mask >> m) & 1;
            ones += v;
            members[m].month = YearMonth(2021, 1);
            members[m].entries.push_back({0, StudyDate(2021, 1, 5), v ? 0.9 : 0.1, v});
        }
        if (majority_vote(members).entries[0].label != (ones >= 2 ? 1 : 0))
            return {false, "majority vote wrong for pattern " + std::to_string(mask)};
    }
    return {true, "10^4 F1 sets, 10^4 relative changes, 8 vote patterns"};
}

Verdict serialization() {
    CounterRng rng(5150);
    for (int i = 0; i < 20; ++i) {
        nn::ArchitectureDescriptor d;
        d.lookback_days = 1 + int(rng.below(7));
        d.conv_channels.assign(1 + rng.below(3), 0);
        for (int& c : d.conv_channels) c = 1 + int(rng.below(16));
        d.dense_hidden.assign(rng.below(3), 0);
        for (int& c : d.dense_hidden) c = 1 + int(rng.below(24));
        nn::ModelParams p = nn::init_params(d, rng());
        for (auto& t : p.weights)
            for (double& x : t.data()) x = rng.uniform(-1, 1) * std::pow(10.0, rng.uniform(-300, 300));
        FeatureStats s;
        for (std::size_t c = 0; c < kFeatureChannels; ++c) {
            s.mean[c] = rng.uniform(-5, 5);
            s.sd[c] = rng.uniform(1e-8, 3);
        }
        const std::string text = nn::serialize_weights(p, s);
        const auto back = nn::parse_weights(text);
        if (!back.params.bitwise_equal(p) || !back.stats || !(*back.stats == s))
            return {false, "model " + std::to_string(i) + " did not round-trip"};

        // Corruptions: truncation, a changed payload character, a wrong checksum.
        std::vector<std::string> bad{text.substr(0, text.size() * 2 / 3)};
        const auto pos = text.find("\"data\"");
        std::string flipped = text;
        const std::size_t c = flipped.find('"', pos + 7) + 2;
        flipped[c] = flipped[c] == 'Q' ? 'R' : 'Q';
        bad.push_back(flipped);
        auto j = nlohmann::json::parse(text);
        j["crc32"] = j["crc32"].get<std::uint32_t>() ^ 1u;
        bad.push_back(j.dump());
        for (const auto& b : bad) {
            try {
                nn::parse_weights(b);
                return {false, "corrupted payload of model " + std::to_string(i) + " was accepted"};
            } catch (const CorruptFile&) {
            }
        }
    }
    return {true, "20 random models bit-exact; 60 corrupted payloads rejected"};
}

// Reduced end-to-end run: synthesize, write, reload, run the matrix, emit the report.
std::string experiment_results(const fs::path& dir) {
    fs::remove_all(dir);
    synth::FamilyParams fp;
    fp.tracts = 20;
    fp.months = 9;
    synth::write_family(synth::generate_family(fp, 42), dir / "family");
    MatrixOptions o;
    o.ks = {1, 3};
    o.test_months = {YearMonth(2020, 8), YearMonth(2020, 9)};
    o.train.max_epochs = 3;
    o.seed = 42;
    const auto r = run_matrix(synth::load_family(dir / "family"), CrimeClass::Property, o);
    emit_report(r, dir / "report");
    return slurp(dir / "report" / "results.csv");
}

Verdict determinism() {
    const fs::path root = fs::temp_directory_path() / "crimexfer_acceptance_determinism";
    const std::string a = experiment_results(root / "a");
    const std::string b = experiment_results(root / "b");
    const auto rows = std::count(a.begin(), a.end(), '\n');
    fs::remove_all(root);
    return {a == b && rows > 1, std::to_string(rows - 1) + " result rows, " + (a == b ? "identical" : "different")};
}

// Baseline average monthly F1 on the final 5 months of city0 for each k.
std::vector<double> baseline_curve(std::uint64_t seed, const std::vector<int>& ks) {
    const auto fam = synth::generate_family({}, seed);
    const PreparedCity city(fam.datasets()[0], CrimeClass::Property);
    const auto months = fam.cities[0].dataset.final_months(5);
    std::vector<double> out;
    for (int k : ks) {
        std::vector<double> f1s;
        for (const auto& m : months) {
            TrainConfig cfg;
            cfg.seed = cell_seed(seed, "city0", k, m);
            const auto model = train_baseline(city, k, m, cfg, nn::ArchitectureDescriptor{});
            f1s.push_back(f1_month(predict_month(model, city, m), city.labels(), m).f1);
        }
        out.push_back(avg_monthly_f1(f1s));
    }
    return out;
}

Verdict scarcity() {
    const auto t0 = Clock::now();
    std::vector<double> k1, k7;
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        const auto c = baseline_curve(seed, {1, 7});
        k1.push_back(c[0]);
        k7.push_back(c[1]);
    }
    const double secs = seconds_since(t0);
    const double m1 = median(k1), m7 = median(k7);
    return {m1 < m7 && secs <= 15 * 60,
            "median baseline F1 k=1 " + fmt(m1) + " vs k=7 " + fmt(m7) + " (k=1: " + join(k1) + "; k=7: " + join(k7) +
                "), " + fmt(secs, 4) + " s"};
}

Verdict transfer_benefit() {
    const auto t0 = Clock::now();
    std::vector<double> k1, k7;
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        const auto fam = synth::generate_family({}, seed);
        MatrixOptions o;
        o.ks = {1, 7};
        o.targets = {"city0"};
        o.seed = seed;
        const auto r = run_matrix(fam.datasets(), CrimeClass::Property, o);
        for (const auto& row : relative_change_table(r.results)) {
            if (row.variant != kVotingVariant) continue;
            const double v = row.rel_change_pct ? *row.rel_change_pct : 0.0;
            (row.k == 1 ? k1 : k7).push_back(v);
        }
    }
    const double med1 = median(k1), mean1 = mean(k1), mean7 = mean(k7);
    return {med1 > 0.0 && mean1 > mean7,
            "Voting relative change k=1 median " + fmt(med1) + "%, mean " + fmt(mean1) + "% vs k=7 mean " +
                fmt(mean7) + "% (k=1: " + join(k1) + "; k=7: " + join(k7) + "), " + fmt(seconds_since(t0), 4) + " s"};
}

Verdict no_leakage() {
    const auto fam = synth::generate_family({}, 99);
    const auto ds = fam.datasets();
    const YearMonth month(2020, 9);
    const StudyDate cutoff = month.last_day();

    CityDataset perturbed = *ds[0];
    CounterRng rng(13);
    std::size_t changed = 0;
    for (auto& r : perturbed.od_flows)
        if (r.date > cutoff) r.volume = rng.uniform(0, 5000), ++changed;
    std::erase_if(perturbed.crimes, [&](const CrimeEvent& e) { return e.date > cutoff && rng.below(2) == 0; });
    for (int i = 0; i < 2000; ++i)
        perturbed.crimes.push_back({cutoff.plus_days(1 + std::int64_t(rng.below(90))),
                                    perturbed.tracts[rng.below(perturbed.tracts.size())].id, "robbery"});
    normalize(perturbed);
    const auto pds = std::make_shared<const CityDataset>(std::move(perturbed));

    TrainConfig cfg;
    cfg.max_epochs = 3;
    const auto source = pretrain_source(PreparedCity(ds[1], CrimeClass::Property), month, cfg, {});
    std::vector<std::vector<double>> probs(2);
    int which = 0;
    for (const auto& target : {ds[0], pds}) {
        const PreparedCity city(target, CrimeClass::Property);
        const auto base = train_baseline(city, 3, month, cfg, {});
        const auto ft = fine_tune(source, "city1", city, 3, month, cfg, {}).fine_tuned;
        for (const auto* m : {&base, &ft})
            for (const auto& e : predict_month(*m, city, month).entries) probs[which].push_back(e.probability);
        ++which;
    }
    bool equal = probs[0].size() == probs[1].size() && !probs[0].empty();
    for (std::size_t i = 0; equal && i < probs[0].size(); ++i) equal = same_bits(probs[0][i], probs[1][i]);
    return {equal, std::to_string(probs[0].size()) + " predictions compared after perturbing " + std::to_string(changed) +
                       " later flow records and the later crime log"};
}

Verdict matrix_runtime() {
    const auto t0 = Clock::now();
    const auto fam = synth::generate_family({}, 1);
    MatrixOptions o;
    o.seed = 1;
    const auto r = run_matrix(fam.datasets(), CrimeClass::Property, o);
    const double secs = seconds_since(t0);
    const unsigned cores = std::max(1u, std::thread::hardware_concurrency());
    return {secs <= 30 * 60 && r.results.size() == 4u * 7u * 5u * 5u,
            std::to_string(r.runs.size()) + " trained models in " + fmt(secs, 5) + " s on " + std::to_string(cores) +
                " hardware thread(s)"};
}

struct Criterion {
    const char* name;
    const char* title;
    std::function<Verdict()> run;
};

} // namespace

int main(int argc, char** argv) {
    const std::vector<Criterion> all{
        {"gradcheck", "gradient correctness", gradient_correctness},
        {"feature_oracle", "feature-oracle equivalence", feature_oracle},
        {"metric_oracles", "metric oracles", metric_oracles},
        {"serialization", "serialization round-trip", serialization},
        {"determinism", "end-to-end determinism", determinism},
        {"scarcity", "scarcity effect", scarcity},
        {"transfer", "transfer benefit", transfer_benefit},
        {"no_leakage", "no-leakage probe", no_leakage},
        {"matrix_runtime", "desk-scale matrix runtime", matrix_runtime},
    };
    std::set<std::string> only;
    for (int i = 1; i < argc; ++i) {
        const std::string a = argv[i];
        if (a == "--only" && i + 1 < argc) {
            std::stringstream ss(argv[++i]);
            std::string name;
            while (std::getline(ss, name, ',')) only.insert(name);
        } else if (a == "--list") {
            for (const auto& c : all) std::cout << c.name << '\n';
            return 0;
        } else {
            std::cerr << "usage: " << argv[0] << " [--list] [--only name[,name...]]\n";
            return 1;
        }
    }
    for (const auto& n : only)
        if (std::none_of(all.begin(), all.end(), [&](const Criterion& c) { return n == c.name; })) {
            std::cerr << "unknown criterion " << n << '\n';
            return 1;
        }

    int failures = 0;
    for (const auto& c : all) {
        if (!only.empty() && !only.count(c.name)) continue;
        Verdict v;
        try {
            v = c.run();
        } catch (const std::exception& e) {
            v = {false, std::string("exception: ") + e.what()};
        }
        failures += !v.pass;
        std::cout << (v.pass ? "PASS " : "FAIL ") << c.name << " (" << c.title << "): " << v.detail << std::endl;
    }
    return failures == 0 ? 0 : 1;
}
