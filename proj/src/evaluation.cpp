#include "crimexfer/evaluation.hpp"

#include "crimexfer/config_json.hpp"
#include "crimexfer/error.hpp"
#include "crimexfer/ingest.hpp"
#include "crimexfer/parallel.hpp"
#include "crimexfer/rng.hpp"
#include "crimexfer/weights_io.hpp"

#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <mutex>
#include <ostream>
#include <set>
#include <sstream>

namespace crimexfer {

namespace fs = std::filesystem;

MonthlyF1 f1_month(const PredictionSet& preds, const HotspotLabels& truth, YearMonth month) {
    MonthlyF1 out;
    out.month = month;
    for (const auto& p : preds.entries)
        if (YearMonth::of(p.date) == month) out.counts.add(p.label != 0, truth.at(p.tract, p.date) != 0);
    if (out.counts.total() == 0) throw EmptyDomain("no predictions dated in " + month.str());
    out.f1 = f1_score(out.counts, &out.degenerate);
    return out;
}

double avg_monthly_f1(std::span<const double> f1s) {
    if (f1s.empty()) return 0.0;
    double sum = 0.0;
    for (double f : f1s) sum += f;
    return sum / static_cast<double>(f1s.size());
}

double avg_monthly_f1(std::span<const MonthlyF1> months) {
    std::vector<double> f1s;
    f1s.reserve(months.size());
    for (const auto& m : months) f1s.push_back(m.f1);
    return avg_monthly_f1(f1s);
}

namespace {

std::uint64_t name_tag(const std::string& s) { return hash_name(s.data(), s.size()); }

std::uint64_t month_tag(YearMonth m) { return static_cast<std::uint64_t>(m.year) * 12 + m.month; }

std::string format_number(double v) {
    char buf[64];
    const auto r = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, r.ptr);
}

RunRecord record_for(const std::string& kind, const std::string& target, const std::string& source, int k,
                     YearMonth month, std::uint64_t seed, const TrainedModel& m) {
    RunRecord r;
    r.kind = kind;
    r.target = target;
    r.source = source;
    r.k = k;
    r.test_month = month;
    r.seed = seed;
    r.checksum = nn::params_checksum(m.params);
    r.chosen_lr = m.chosen_lr;
    r.chosen_epoch = m.chosen_epoch;
    r.best_val_f1 = m.best_val_f1;
    r.epochs_run = m.history.empty() ? 0 : m.history.size() - 1;
    return r;
}

[[noreturn]] void rethrow_with_job(const std::string& job) {
    try {
        throw;
    } catch (const Error& e) {
        throw Error(e.kind(), job + ": " + e.what());
    } catch (const std::exception& e) {
        throw Error(ErrorKind::Numeric, job + ": " + e.what());
    }
}

struct CellJob {
    std::size_t target = 0;
    int k = 0;
    YearMonth month;
    std::optional<std::size_t> source; // nullopt: baseline
};

struct CellOutput {
    PredictionSet preds;
    MonthlyF1 metrics;
    RunRecord run;
};

} // namespace

std::uint64_t cell_seed(std::uint64_t master, const std::string& target, int k, YearMonth month) {
    return derive_seed(master, {0xce11ULL, name_tag(target), static_cast<std::uint64_t>(k), month_tag(month)});
}

std::uint64_t pretrain_seed(std::uint64_t master, const std::string& source, YearMonth month) {
    return derive_seed(master, {0x50c4ceULL, name_tag(source), month_tag(month)});
}

MatrixResult run_matrix(const std::vector<std::shared_ptr<const CityDataset>>& family, CrimeClass crime_class,
                        const MatrixOptions& opts) {
    if (family.size() < 2) throw DataError("an experiment needs at least two cities");
    std::set<std::string> names;
    for (const auto& c : family) {
        if (!c) throw DataError("null city in family");
        if (c->period != family[0]->period)
            throw DataError("city " + c->city_name + " does not share the study period of " + family[0]->city_name);
        if (c->city_name == kBaselineVariant || c->city_name == kVotingVariant || c->city_name.empty())
            throw DataError("city name '" + c->city_name + "' is reserved");
        if (!names.insert(c->city_name).second) throw DataError("duplicate city name " + c->city_name);
    }
    if (opts.ks.empty()) throw DataError("no scarcity levels requested");
    for (int k : opts.ks)
        if (k < 1 || k > kPretrainMonths) throw DataError("k must lie in 1.." + std::to_string(kPretrainMonths));
    opts.arch.validate();

    MatrixResult res;
    res.crime_class = crime_class;
    res.ks = opts.ks;
    res.test_months = opts.test_months.empty() ? family[0]->final_months(5) : opts.test_months;
    res.seed = opts.seed;
    res.train = opts.train;
    res.arch = opts.arch;
    for (const auto& c : family) {
        res.cities.push_back(c->city_name);
        res.city_checksums.push_back(dataset_checksum(*c));
    }

    std::vector<std::size_t> targets;
    if (opts.targets.empty()) {
        for (std::size_t i = 0; i < family.size(); ++i) targets.push_back(i);
    } else {
        for (const auto& t : opts.targets) {
            const auto it = std::find(res.cities.begin(), res.cities.end(), t);
            if (it == res.cities.end()) throw DataError("unknown target city " + t);
            targets.push_back(static_cast<std::size_t>(it - res.cities.begin()));
        }
    }
    for (auto t : targets) res.targets.push_back(res.cities[t]);

    // The first fit doubles as an early range check on every requested month.
    for (const auto& m : res.test_months) make_splits(m, kPretrainMonths, family[0]->period);

    std::vector<std::unique_ptr<PreparedCity>> cities(family.size());
    parallel_for(family.size(), opts.workers,
                 [&](std::size_t i) { cities[i] = std::make_unique<PreparedCity>(family[i], crime_class); });

    std::mutex log_mutex;
    auto log = [&](const std::string& msg) {
        if (!opts.progress) return;
        std::lock_guard lock(log_mutex);
        opts.progress(msg);
    };

    // Sources: every city that is not the sole target.
    std::vector<std::size_t> sources;
    for (std::size_t s = 0; s < family.size(); ++s)
        if (std::any_of(targets.begin(), targets.end(), [&](std::size_t t) { return t != s; })) sources.push_back(s);

    const std::size_t M = res.test_months.size();
    std::vector<std::optional<TrainedModel>> pretrained(family.size() * M);
    std::vector<RunRecord> pretrain_runs(sources.size() * M);
    parallel_for(sources.size() * M, opts.workers, [&](std::size_t j) {
        const std::size_t s = sources[j / M];
        const YearMonth month = res.test_months[j % M];
        const std::string job = "pretrain " + res.cities[s] + " for " + month.str();
        try {
            TrainConfig cfg = opts.train;
            cfg.seed = pretrain_seed(opts.seed, res.cities[s], month);
            pretrained[s * M + j % M] = pretrain_source(*cities[s], month, cfg, opts.arch);
            pretrain_runs[j] = record_for("pretrain", "", res.cities[s], kPretrainMonths, month, cfg.seed,
                                          *pretrained[s * M + j % M]);
        } catch (...) {
            rethrow_with_job(job);
        }
        log(job + " done");
    });

    std::vector<CellJob> jobs;
    for (auto t : targets)
        for (int k : opts.ks)
            for (const auto& month : res.test_months) {
                jobs.push_back({t, k, month, std::nullopt});
                for (auto s : sources)
                    if (s != t) jobs.push_back({t, k, month, s});
            }
    // Longest jobs first keeps the pool busy; outputs land in fixed slots either way.
    std::vector<std::size_t> schedule(jobs.size());
    for (std::size_t j = 0; j < jobs.size(); ++j) schedule[j] = j;
    std::stable_sort(schedule.begin(), schedule.end(), [&](std::size_t a, std::size_t b) { return jobs[a].k > jobs[b].k; });
    std::vector<CellOutput> outputs(jobs.size());
    parallel_for(jobs.size(), opts.workers, [&](std::size_t slot) {
        const std::size_t j = schedule[slot];
        const CellJob& job = jobs[j];
        const PreparedCity& target = *cities[job.target];
        const std::string who = (job.source ? "fine-tune " + res.cities[*job.source] + "->" : "baseline ") +
                                target.name() + " k=" + std::to_string(job.k) + " " + job.month.str();
        try {
            TrainConfig cfg = opts.train;
            cfg.seed = cell_seed(opts.seed, target.name(), job.k, job.month);
            TrainedModel model;
            RunRecord run;
            if (job.source) {
                const std::size_t mi = static_cast<std::size_t>(
                    std::find(res.test_months.begin(), res.test_months.end(), job.month) - res.test_months.begin());
                const TrainedModel& src = *pretrained[*job.source * M + mi];
                TransferRun tr = fine_tune(src, res.cities[*job.source], target, job.k, job.month, cfg, opts.arch);
                model = std::move(tr.fine_tuned);
                run = record_for("fine_tune", target.name(), tr.source_city, job.k, job.month, cfg.seed, model);
                run.source_checksum = tr.source_checksum;
            } else {
                model = train_baseline(target, job.k, job.month, cfg, opts.arch);
                run = record_for("baseline", target.name(), "", job.k, job.month, cfg.seed, model);
            }
            outputs[j].preds = predict_month(model, target, job.month);
            outputs[j].metrics = f1_month(outputs[j].preds, target.labels(), job.month);
            outputs[j].run = std::move(run);
        } catch (...) {
            rethrow_with_job(who);
        }
        log(who + " done");
    });

    res.runs = std::move(pretrain_runs);
    for (auto& o : outputs) res.runs.push_back(o.run);

    // Deterministic merge: target, then Baseline / sources in family order / Voting, then k, then month.
    std::map<std::tuple<std::size_t, std::size_t, int, YearMonth>, const CellOutput*> by_key;
    constexpr std::size_t kBaselineKey = static_cast<std::size_t>(-1);
    for (std::size_t j = 0; j < jobs.size(); ++j)
        by_key[{jobs[j].target, jobs[j].source.value_or(kBaselineKey), jobs[j].k, jobs[j].month}] = &outputs[j];

    for (auto t : targets) {
        const std::string& tname = res.cities[t];
        auto emit = [&](const std::string& variant, int k, YearMonth m, const MonthlyF1& f) {
            res.results.push_back({tname, crime_class, variant, k, m, f});
        };
        for (int k : opts.ks)
            for (const auto& m : res.test_months) emit(kBaselineVariant, k, m, by_key.at({t, kBaselineKey, k, m})->metrics);
        std::vector<std::size_t> own_sources;
        for (auto s : sources)
            if (s != t) own_sources.push_back(s);
        for (auto s : own_sources)
            for (int k : opts.ks)
                for (const auto& m : res.test_months) emit(res.cities[s], k, m, by_key.at({t, s, k, m})->metrics);
        for (int k : opts.ks)
            for (const auto& m : res.test_months) {
                std::vector<PredictionSet> members;
                for (auto s : own_sources) members.push_back(by_key.at({t, s, k, m})->preds);
                const PredictionSet voted = majority_vote(members);
                emit(kVotingVariant, k, m, f1_month(voted, cities[t]->labels(), m));
            }
    }
    return res;
}

namespace {

// Groups rows by (target, class, variant, k) in order of first appearance.
struct Group {
    std::string target;
    CrimeClass crime_class;
    std::string variant;
    int k;
    std::vector<double> f1s;
};

std::vector<Group> group_results(std::span<const ResultRow> results) {
    std::vector<Group> groups;
    std::map<std::tuple<std::string, CrimeClass, std::string, int>, std::size_t> index;
    for (const auto& r : results) {
        const auto key = std::make_tuple(r.target, r.crime_class, r.variant, r.k);
        auto it = index.find(key);
        if (it == index.end()) {
            it = index.emplace(key, groups.size()).first;
            groups.push_back({r.target, r.crime_class, r.variant, r.k, {}});
        }
        groups[it->second].f1s.push_back(r.metrics.f1);
    }
    return groups;
}

} // namespace

std::vector<CurvePoint> f1_curves(std::span<const ResultRow> results) {
    std::vector<CurvePoint> out;
    for (const auto& g : group_results(results))
        out.push_back({g.target, g.crime_class, g.variant, g.k, avg_monthly_f1(g.f1s)});
    return out;
}

std::vector<RelativeChangeRow> relative_change_table(std::span<const ResultRow> results) {
    const auto curves = f1_curves(results);
    std::map<std::tuple<std::string, CrimeClass, int>, double> baseline;
    for (const auto& c : curves)
        if (c.variant == kBaselineVariant) baseline[{c.target, c.crime_class, c.k}] = c.avg_f1;
    std::vector<RelativeChangeRow> out;
    for (const auto& c : curves) {
        if (c.variant == kBaselineVariant) continue;
        const auto it = baseline.find({c.target, c.crime_class, c.k});
        if (it == baseline.end())
            throw DataError("no baseline for " + c.target + " k=" + std::to_string(c.k));
        out.push_back({c.target, c.crime_class, c.variant, c.k, relative_change(c.avg_f1, it->second)});
    }
    return out;
}

void write_results_csv(std::ostream& out, std::span<const ResultRow> results) {
    out << "target,crime_class,variant,k,test_month,f1\n";
    for (const auto& r : results)
        out << r.target << ',' << to_string(r.crime_class) << ',' << r.variant << ',' << r.k << ','
            << r.test_month.str() << ',' << format_number(r.metrics.f1) << '\n';
}

void write_table_csv(std::ostream& out, std::span<const RelativeChangeRow> table) {
    out << "target,crime_class,variant,k,rel_change_pct\n";
    for (const auto& r : table) {
        out << r.target << ',' << to_string(r.crime_class) << ',' << r.variant << ',' << r.k << ',';
        if (r.rel_change_pct) out << format_number(*r.rel_change_pct);
        out << '\n';
    }
}

std::vector<RelativeChangeRow> parse_table_csv(std::istream& in) {
    std::vector<RelativeChangeRow> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (lineno == 1) {
            if (line != "target,crime_class,variant,k,rel_change_pct") throw ParseError(1, "unexpected table header");
            continue;
        }
        if (line.empty()) continue;
        std::vector<std::string> f;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) f.push_back(cell);
        if (!line.empty() && line.back() == ',') f.emplace_back();
        if (f.size() != 5) throw ParseError(lineno, "expected 5 fields");
        RelativeChangeRow r;
        r.target = f[0];
        r.crime_class = parse_crime_class(f[1]);
        r.variant = f[2];
        auto [p, ec] = std::from_chars(f[3].data(), f[3].data() + f[3].size(), r.k);
        if (ec != std::errc{} || p != f[3].data() + f[3].size()) throw ParseError(lineno, "bad k");
        if (!f[4].empty()) {
            double v = 0.0;
            auto [q, ec2] = std::from_chars(f[4].data(), f[4].data() + f[4].size(), v);
            if (ec2 != std::errc{} || q != f[4].data() + f[4].size()) throw ParseError(lineno, "bad rel_change_pct");
            r.rel_change_pct = v;
        }
        out.push_back(std::move(r));
    }
    return out;
}

namespace {

std::string xml_escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
        case '&': out += "&amp;"; break;
        case '<': out += "&lt;"; break;
        case '>': out += "&gt;"; break;
        case '"': out += "&quot;"; break;
        default: out += c;
        }
    }
    return out;
}

std::string fixed(double v, int digits) {
    std::ostringstream s;
    s.setf(std::ios::fixed);
    s.precision(digits);
    s << v;
    return s.str();
}

} // namespace

std::string render_svg(std::span<const CurvePoint> curves, const std::string& title) {
    static const char* palette[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
                                    "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};
    std::vector<std::string> variants;
    int kmin = 1, kmax = 1;
    double ymin = 1.0, ymax = 0.0;
    bool first = true;
    for (const auto& c : curves) {
        if (std::find(variants.begin(), variants.end(), c.variant) == variants.end()) variants.push_back(c.variant);
        kmin = first ? c.k : std::min(kmin, c.k);
        kmax = first ? c.k : std::max(kmax, c.k);
        ymin = std::min(ymin, c.avg_f1);
        ymax = std::max(ymax, c.avg_f1);
        first = false;
    }
    ymin = std::max(0.0, std::floor(ymin * 10.0) / 10.0);
    ymax = std::min(1.0, std::ceil(ymax * 10.0) / 10.0);
    if (ymax - ymin < 0.1) ymax = std::min(1.0, ymin + 0.1), ymin = ymax - 0.1;

    const double W = 720, H = 420, left = 60, right = 170, top = 40, bottom = 50;
    const double pw = W - left - right, ph = H - top - bottom;
    auto px = [&](int k) { return left + (kmax == kmin ? pw / 2 : pw * (k - kmin) / double(kmax - kmin)); };
    auto py = [&](double y) { return top + ph * (1.0 - (y - ymin) / (ymax - ymin)); };

    std::ostringstream s;
    s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\" viewBox=\"0 0 " << W
      << ' ' << H << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    s << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    s << "<text x=\"" << W / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">" << xml_escape(title)
      << "</text>\n";
    for (int i = 0; i <= 5; ++i) {
        const double y = ymin + (ymax - ymin) * i / 5.0;
        s << "<line x1=\"" << left << "\" x2=\"" << left + pw << "\" y1=\"" << fixed(py(y), 1) << "\" y2=\""
          << fixed(py(y), 1) << "\" stroke=\"#ddd\"/>\n";
        s << "<text x=\"" << left - 6 << "\" y=\"" << fixed(py(y) + 4, 1) << "\" text-anchor=\"end\">" << fixed(y, 2)
          << "</text>\n";
    }
    for (int k = kmin; k <= kmax; ++k)
        s << "<text x=\"" << fixed(px(k), 1) << "\" y=\"" << top + ph + 18 << "\" text-anchor=\"middle\">" << k
          << "</text>\n";
    s << "<text x=\"" << left + pw / 2 << "\" y=\"" << H - 10 << "\" text-anchor=\"middle\">months of target data (k)</text>\n";
    s << "<text transform=\"translate(16," << top + ph / 2 << ") rotate(-90)\" text-anchor=\"middle\">average monthly F1</text>\n";
    s << "<rect x=\"" << left << "\" y=\"" << top << "\" width=\"" << pw << "\" height=\"" << ph
      << "\" fill=\"none\" stroke=\"#333\"/>\n";

    for (std::size_t v = 0; v < variants.size(); ++v) {
        const char* color = palette[v % std::size(palette)];
        std::vector<std::pair<int, double>> pts;
        for (const auto& c : curves)
            if (c.variant == variants[v]) pts.emplace_back(c.k, c.avg_f1);
        std::sort(pts.begin(), pts.end());
        s << "<g class=\"series\" data-variant=\"" << xml_escape(variants[v]) << "\">\n<polyline fill=\"none\" stroke=\""
          << color << "\" stroke-width=\"2\" points=\"";
        for (std::size_t i = 0; i < pts.size(); ++i)
            s << (i ? " " : "") << fixed(px(pts[i].first), 1) << ',' << fixed(py(pts[i].second), 1);
        s << "\"/>\n";
        for (const auto& [k, y] : pts)
            s << "<circle cx=\"" << fixed(px(k), 1) << "\" cy=\"" << fixed(py(y), 1) << "\" r=\"3\" fill=\"" << color
              << "\"/>\n";
        const double ly = top + 12 + 20.0 * static_cast<double>(v);
        s << "<line x1=\"" << left + pw + 15 << "\" x2=\"" << left + pw + 40 << "\" y1=\"" << ly << "\" y2=\"" << ly
          << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
        s << "<text x=\"" << left + pw + 46 << "\" y=\"" << ly + 4 << "\">" << xml_escape(variants[v]) << "</text>\n</g>\n";
    }
    s << "</svg>\n";
    return s.str();
}

namespace {

std::ofstream open_report_file(const fs::path& p) {
    std::ofstream out(p, std::ios::binary);
    if (!out) throw IoError("cannot write " + p.string());
    return out;
}

void finish(std::ofstream& out, const fs::path& p) {
    out.flush();
    if (!out) throw IoError("write failed: " + p.string());
}

std::string file_safe(const std::string& s) {
    std::string out;
    for (char c : s) out += (std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_') ? c : '_';
    return out;
}

nlohmann::json manifest_json(const MatrixResult& r) {
    nlohmann::json j;
    j["crime_class"] = std::string(to_string(r.crime_class));
    j["seed"] = r.seed;
    j["ks"] = r.ks;
    std::vector<std::string> months;
    for (const auto& m : r.test_months) months.push_back(m.str());
    j["test_months"] = months;
    j["targets"] = r.targets;
    for (std::size_t i = 0; i < r.cities.size(); ++i)
        j["cities"].push_back({{"name", r.cities[i]}, {"checksum", r.city_checksums[i]}});
    j["train"] = train_config_to_json(r.train);
    j["architecture"] = r.arch;
    std::map<std::string, int> counts;
    for (const auto& run : r.runs) {
        ++counts[run.kind];
        nlohmann::json e{{"kind", run.kind},
                         {"target", run.target},
                         {"source", run.source},
                         {"k", run.k},
                         {"test_month", run.test_month.str()},
                         {"seed", run.seed},
                         {"checksum", run.checksum},
                         {"chosen_lr", run.chosen_lr},
                         {"chosen_epoch", run.chosen_epoch},
                         {"best_val_f1", run.best_val_f1},
                         {"epochs_run", run.epochs_run}};
        if (run.kind == "fine_tune") e["source_checksum"] = run.source_checksum;
        j["runs"].push_back(std::move(e));
    }
    j["run_counts"] = counts;
    if (!j.contains("runs")) j["runs"] = nlohmann::json::array();
    return j;
}

} // namespace

std::vector<fs::path> emit_report(const MatrixResult& result, const fs::path& out_dir, const ReportFormats& formats) {
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec) throw IoError("cannot create " + out_dir.string() + ": " + ec.message());
    std::vector<fs::path> written;
    const auto table = relative_change_table(result.results);
    const auto curves = f1_curves(result.results);

    if (formats.csv) {
        const fs::path rp = out_dir / "results.csv";
        auto r = open_report_file(rp);
        write_results_csv(r, result.results);
        finish(r, rp);
        const fs::path tp = out_dir / "table.csv";
        auto t = open_report_file(tp);
        write_table_csv(t, table);
        finish(t, tp);
        written.insert(written.end(), {rp, tp});
    }
    if (formats.json) {
        nlohmann::json j;
        j["relative_change"] = nlohmann::json::array();
        for (const auto& row : table)
            j["relative_change"].push_back({{"target", row.target},
                                            {"crime_class", std::string(to_string(row.crime_class))},
                                            {"variant", row.variant},
                                            {"k", row.k},
                                            {"rel_change_pct", row.rel_change_pct ? nlohmann::json(*row.rel_change_pct)
                                                                                  : nlohmann::json(nullptr)}});
        j["average_f1"] = nlohmann::json::array();
        for (const auto& c : curves)
            j["average_f1"].push_back({{"target", c.target},
                                       {"crime_class", std::string(to_string(c.crime_class))},
                                       {"variant", c.variant},
                                       {"k", c.k},
                                       {"avg_f1", c.avg_f1}});
        const fs::path p = out_dir / "tables.json";
        auto out = open_report_file(p);
        out << j.dump(2) << '\n';
        finish(out, p);
        written.push_back(p);
    }
    {
        const fs::path p = out_dir / "manifest.json";
        auto out = open_report_file(p);
        out << manifest_json(result).dump(2) << '\n';
        finish(out, p);
        written.push_back(p);
    }
    if (formats.svg) {
        std::vector<std::pair<std::string, CrimeClass>> charts;
        for (const auto& c : curves)
            if (std::find(charts.begin(), charts.end(), std::make_pair(c.target, c.crime_class)) == charts.end())
                charts.emplace_back(c.target, c.crime_class);
        for (const auto& [target, cls] : charts) {
            std::vector<CurvePoint> mine;
            for (const auto& c : curves)
                if (c.target == target && c.crime_class == cls) mine.push_back(c);
            const fs::path p = out_dir / ("f1_" + file_safe(target) + "_" + std::string(to_string(cls)) + ".svg");
            auto out = open_report_file(p);
            out << render_svg(mine, target + " (" + std::string(to_string(cls)) + ")");
            finish(out, p);
            written.push_back(p);
        }
    }
    return written;
}

} // namespace crimexfer
