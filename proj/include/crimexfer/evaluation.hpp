#pragma once

#include "crimexfer/metrics.hpp"
#include "crimexfer/transfer.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace crimexfer {

struct MonthlyF1 {
    YearMonth month;
    Confusion counts;
    double f1 = 0.0;
    bool degenerate = false; // no positives in predictions or truth
};

/// Pooled F1 of the predictions dated in `month`. EmptyDomain if there are none.
MonthlyF1 f1_month(const PredictionSet& preds, const HotspotLabels& truth, YearMonth month);

/// Unweighted mean; 0 for an empty list.
double avg_monthly_f1(std::span<const MonthlyF1> months);
double avg_monthly_f1(std::span<const double> f1s);

inline const std::string kBaselineVariant = "Baseline";
inline const std::string kVotingVariant = "Voting";

struct MatrixOptions {
    std::vector<int> ks{1, 2, 3, 4, 5, 6, 7};
    std::vector<YearMonth> test_months;  // empty: the final 5 months of the shared period
    std::vector<std::string> targets;    // empty: every city
    TrainConfig train;                   // train.seed is ignored; per-job seeds derive from `seed`
    nn::ArchitectureDescriptor arch;
    std::uint64_t seed = 1;
    std::size_t workers = 0;             // 0: hardware threads
    std::function<void(const std::string&)> progress;
};

struct ResultRow {
    std::string target;
    CrimeClass crime_class = CrimeClass::Property;
    std::string variant; // Baseline, a source city, or Voting
    int k = 0;
    YearMonth test_month;
    MonthlyF1 metrics;
};

/// One trained model of the matrix, with what is needed to retrain it.
struct RunRecord {
    std::string kind; // pretrain | baseline | fine_tune
    std::string target;
    std::string source;
    int k = 0;
    YearMonth test_month;
    std::uint64_t seed = 0;
    std::uint32_t checksum = 0;        // of the returned parameters
    std::uint32_t source_checksum = 0; // fine_tune only
    double chosen_lr = 0.0;
    int chosen_epoch = 0;
    double best_val_f1 = 0.0;
    std::size_t epochs_run = 0;
};

struct RelativeChangeRow {
    std::string target;
    CrimeClass crime_class = CrimeClass::Property;
    std::string variant;
    int k = 0;
    std::optional<double> rel_change_pct; // empty when the baseline average is 0
    friend bool operator==(const RelativeChangeRow&, const RelativeChangeRow&) = default;
};

struct CurvePoint {
    std::string target;
    CrimeClass crime_class = CrimeClass::Property;
    std::string variant;
    int k = 0;
    double avg_f1 = 0.0;
};

struct MatrixResult {
    CrimeClass crime_class = CrimeClass::Property;
    std::vector<std::string> cities;
    std::vector<std::uint32_t> city_checksums;
    std::vector<std::string> targets;
    std::vector<int> ks;
    std::vector<YearMonth> test_months;
    std::uint64_t seed = 0;
    TrainConfig train;
    nn::ArchitectureDescriptor arch;
    std::vector<ResultRow> results;
    std::vector<RunRecord> runs;
};

/// Seed shared by the baseline and every fine-tune of one (target, k, test month) cell.
std::uint64_t cell_seed(std::uint64_t master, const std::string& target, int k, YearMonth month);
/// Seed of a source model pretrained for one test month.
std::uint64_t pretrain_seed(std::uint64_t master, const std::string& source, YearMonth month);

/// The full protocol: every target against every other city as a source, baseline and Voting,
/// for each k and test month. Source models are pretrained once per (source, month) and shared
/// across targets. DataError unless the family has >= 2 cities sharing one study period.
MatrixResult run_matrix(const std::vector<std::shared_ptr<const CityDataset>>& family, CrimeClass crime_class,
                        const MatrixOptions& opts);

/// Relative change of each variant's average monthly F1 against the baseline, per (target, k).
std::vector<RelativeChangeRow> relative_change_table(std::span<const ResultRow> results);
/// Average monthly F1 per (target, variant, k), baseline included.
std::vector<CurvePoint> f1_curves(std::span<const ResultRow> results);

void write_results_csv(std::ostream& out, std::span<const ResultRow> results);
void write_table_csv(std::ostream& out, std::span<const RelativeChangeRow> table);
std::vector<RelativeChangeRow> parse_table_csv(std::istream& in);

/// Line chart of one (target, crime class): x = k, y = average F1, one series per variant.
std::string render_svg(std::span<const CurvePoint> curves, const std::string& title);

struct ReportFormats {
    bool csv = true;
    bool json = true;
    bool svg = true;
};

/// Writes results.csv, table.csv, tables.json, manifest.json and one SVG per (target, class)
/// into `out_dir`. Returns the files written. IoError names the offending path.
std::vector<std::filesystem::path> emit_report(const MatrixResult& result, const std::filesystem::path& out_dir,
                                               const ReportFormats& formats = {});

} // namespace crimexfer
