#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace smfc {

// One raw sensor reading. Timestamps are UTC epoch seconds.
struct SampleRecord {
    double timestamp = 0.0;
    double voltage = 0.0;
    double current = 0.0;
    double power = 0.0;
    double ec = 0.0;
    double temp = 0.0;
    double vwc = 0.0;
};

struct SampleSeries {
    std::vector<SampleRecord> records;
    double deployment_start = 0.0;
};

struct ParseReport {
    std::size_t rows_read = 0;
    std::size_t rows_skipped = 0;
};

struct ResampledInterval {
    double interval_start = 0.0;
    double mean_voltage = 0.0;
    double mean_current = 0.0;
    double mean_power = 0.0;
    double mean_ec = 0.0;
    double mean_temp = 0.0;
    double mean_vwc = 0.0;
    std::size_t sample_count = 0;

    bool missing() const { return sample_count == 0; }
};

struct ResampledSeries {
    double horizon = 0.0;  // seconds
    double deployment_start = 0.0;
    std::vector<ResampledInterval> intervals;
};

inline constexpr std::array<double, 5> kSupportedHorizons = {180, 300, 900, 1800, 3600};
inline constexpr int kSequenceLength = 4;
inline constexpr int kFeatureCount = 8;
inline constexpr int kTargetCount = 3;

// Feature order within a timestep:
// power, voltage, current, ec, temp, vwc, days_since_deployment, hour_of_day
struct SupervisedWindow {
    double input[kSequenceLength][kFeatureCount] = {};
    double target[kTargetCount] = {};  // voltage, current, power
    double target_interval_start = 0.0;
};

struct SupervisedDataset {
    double horizon = 0.0;
    std::vector<SupervisedWindow> windows;
    std::size_t windows_dropped = 0;  // windows lost to resampling gaps
};

struct SplitSpec {
    double train_fraction = 0.70;
    double val_fraction = 0.15;
    double test_fraction = 0.15;
};

struct ChronoSplit {
    SupervisedDataset train;
    SupervisedDataset val;
    SupervisedDataset test;
};

// Fold k of the walk-forward scheme: first 20k% train, next 10% naive
// history, next 10% test.
struct TscvFold {
    SupervisedDataset train;
    SupervisedDataset naive_history;
    SupervisedDataset test;
};

// Parses a delimited trace with header
// timestamp,voltage,current,power,ec,temp,vwc. Timestamps may be epoch
// seconds or ISO-8601; rows are sorted ascending. Bad rows are skipped
// and counted in the report.
SampleSeries parse_samples(std::istream& source, double deployment_start, ParseReport& report);
SampleSeries parse_samples_file(const std::string& path, double deployment_start,
                                ParseReport& report);

void write_samples(const SampleSeries& series, std::ostream& out);

// Drops exact-zero-voltage rows (data outage sentinel). Throws if
// nothing survives.
SampleSeries sanitize(const SampleSeries& series, std::size_t& removed);

ResampledSeries resample(const SampleSeries& series, double horizon);

SupervisedDataset build_supervised(const ResampledSeries& resampled, double deployment_start);

ChronoSplit split_chrono(const SupervisedDataset& dataset, const SplitSpec& spec);

std::vector<TscvFold> tscv_folds(const SupervisedDataset& dataset);

// ISO-8601 "YYYY-MM-DDThh:mm:ss[Z]" or plain epoch seconds.
bool parse_timestamp(const std::string& text, double& out);

}  // namespace smfc
