#include "dataset.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace smfc {

namespace {

// Days since 1970-01-01 for a civil date (Howard Hinnant's algorithm).
long days_from_civil(int y, int m, int d) {
    y -= m <= 2;
    const long era = (y >= 0 ? y : y - 399) / 400;
    const unsigned yoe = static_cast<unsigned>(y - era * 400);
    const unsigned doy = (153u * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
    const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    return era * 146097 + static_cast<long>(doe) - 719468;
}

std::vector<std::string> split_fields(const std::string& line, char delim) {
    std::vector<std::string> out;
    std::string field;
    std::stringstream ss(line);
    while (std::getline(ss, field, delim)) out.push_back(field);
    if (!line.empty() && line.back() == delim) out.emplace_back();
    return out;
}

std::string trim(const std::string& s) {
    std::size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
}

bool parse_double(const std::string& text, double& out) {
    const std::string t = trim(text);
    if (t.empty()) return false;
    const char* begin = t.data();
    const char* end = begin + t.size();
    auto [ptr, ec] = std::from_chars(begin, end, out);
    return ec == std::errc() && ptr == end && std::isfinite(out);
}

}  // namespace

bool parse_timestamp(const std::string& text, double& out) {
    const std::string t = trim(text);
    if (parse_double(t, out)) return true;
    int y, mo, d, h, mi;
    double s;
    char sep;
    if (std::sscanf(t.c_str(), "%d-%d-%d%c%d:%d:%lf", &y, &mo, &d, &sep, &h, &mi, &s) == 7 &&
        (sep == 'T' || sep == ' ') && mo >= 1 && mo <= 12 && d >= 1 && d <= 31 && h >= 0 &&
        h < 24 && mi >= 0 && mi < 60 && s >= 0 && s < 61) {
        out = static_cast<double>(days_from_civil(y, mo, d)) * 86400.0 + h * 3600.0 + mi * 60.0 + s;
        return true;
    }
    return false;
}

SampleSeries parse_samples(std::istream& source, double deployment_start, ParseReport& report) {
    report = {};
    std::string line;
    if (!std::getline(source, line)) throw std::runtime_error("no samples");
    if (!line.empty() && line.back() == '\r') line.pop_back();

    static const char* kColumns[7] = {"timestamp", "voltage", "current", "power",
                                      "ec",        "temp",    "vwc"};
    const auto header = split_fields(line, ',');
    std::array<int, 7> col_index;
    col_index.fill(-1);
    for (std::size_t i = 0; i < header.size(); ++i) {
        const std::string name = trim(header[i]);
        for (int c = 0; c < 7; ++c)
            if (name == kColumns[c]) col_index[c] = static_cast<int>(i);
    }
    for (int c = 0; c < 7; ++c)
        if (col_index[c] < 0)
            throw std::runtime_error(std::string("missing required column: ") + kColumns[c]);

    SampleSeries series;
    series.deployment_start = deployment_start;
    while (std::getline(source, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (trim(line).empty()) continue;
        ++report.rows_read;
        const auto fields = split_fields(line, ',');
        double vals[7];
        bool ok = true;
        for (int c = 0; c < 7 && ok; ++c) {
            const auto idx = static_cast<std::size_t>(col_index[c]);
            if (idx >= fields.size()) {
                ok = false;
                break;
            }
            ok = (c == 0) ? parse_timestamp(fields[idx], vals[0]) : parse_double(fields[idx], vals[c]);
        }
        if (!ok) {
            ++report.rows_skipped;
            continue;
        }
        series.records.push_back(
            {vals[0], vals[1], vals[2], vals[3], vals[4], vals[5], vals[6]});
    }
    if (report.rows_read == 0) throw std::runtime_error("no samples");

    std::stable_sort(series.records.begin(), series.records.end(),
                     [](const SampleRecord& a, const SampleRecord& b) {
                         return a.timestamp < b.timestamp;
                     });
    // Duplicate timestamps break the strict-ordering invariant; keep the first.
    auto last = std::unique(series.records.begin(), series.records.end(),
                            [](const SampleRecord& a, const SampleRecord& b) {
                                return a.timestamp == b.timestamp;
                            });
    report.rows_skipped += static_cast<std::size_t>(series.records.end() - last);
    series.records.erase(last, series.records.end());
    if (series.records.empty()) throw std::runtime_error("no samples");
    return series;
}

SampleSeries parse_samples_file(const std::string& path, double deployment_start,
                                ParseReport& report) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open trace file: " + path);
    return parse_samples(in, deployment_start, report);
}

void write_samples(const SampleSeries& series, std::ostream& out) {
    out << "timestamp,voltage,current,power,ec,temp,vwc\n";
    char buf[256];
    for (const auto& r : series.records) {
        std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n",
                      r.timestamp, r.voltage, r.current, r.power, r.ec, r.temp, r.vwc);
        out << buf;
    }
}

SampleSeries sanitize(const SampleSeries& series, std::size_t& removed) {
    SampleSeries out;
    out.deployment_start = series.deployment_start;
    out.records.reserve(series.records.size());
    for (const auto& r : series.records)
        if (r.voltage != 0.0) out.records.push_back(r);
    removed = series.records.size() - out.records.size();
    if (out.records.empty()) throw std::runtime_error("series empty after sanitization");
    return out;
}

ResampledSeries resample(const SampleSeries& series, double horizon) {
    const bool supported =
        std::find(kSupportedHorizons.begin(), kSupportedHorizons.end(), horizon) !=
        kSupportedHorizons.end();
    if (!supported)
        throw std::runtime_error(
            "unsupported horizon (supported: 180, 300, 900, 1800, 3600 seconds)");
    if (series.records.empty()) throw std::runtime_error("cannot resample empty series");

    const double start = series.deployment_start;
    auto bucket_of = [&](double t) {
        return static_cast<long>(std::floor((t - start) / horizon));
    };
    const long first = bucket_of(series.records.front().timestamp);
    const long last = bucket_of(series.records.back().timestamp);

    ResampledSeries out;
    out.horizon = horizon;
    out.deployment_start = start;
    out.intervals.resize(static_cast<std::size_t>(last - first + 1));
    for (std::size_t k = 0; k < out.intervals.size(); ++k)
        out.intervals[k].interval_start = start + (first + static_cast<long>(k)) * horizon;

    for (const auto& r : series.records) {
        auto& iv = out.intervals[static_cast<std::size_t>(bucket_of(r.timestamp) - first)];
        iv.mean_voltage += r.voltage;
        iv.mean_current += r.current;
        iv.mean_power += r.power;
        iv.mean_ec += r.ec;
        iv.mean_temp += r.temp;
        iv.mean_vwc += r.vwc;
        ++iv.sample_count;
    }
    for (auto& iv : out.intervals) {
        if (iv.sample_count == 0) continue;
        const double n = static_cast<double>(iv.sample_count);
        iv.mean_voltage /= n;
        iv.mean_current /= n;
        iv.mean_power /= n;
        iv.mean_ec /= n;
        iv.mean_temp /= n;
        iv.mean_vwc /= n;
    }
    return out;
}

SupervisedDataset build_supervised(const ResampledSeries& resampled, double deployment_start) {
    SupervisedDataset out;
    out.horizon = resampled.horizon;
    const auto& ivs = resampled.intervals;
    for (std::size_t t = kSequenceLength; t < ivs.size(); ++t) {
        bool usable = !ivs[t].missing();
        for (int k = 1; k <= kSequenceLength && usable; ++k)
            usable = !ivs[t - static_cast<std::size_t>(k)].missing();
        if (!usable) {
            // span reaches a gap; only count it if the target itself exists
            if (!ivs[t].missing()) ++out.windows_dropped;
            continue;
        }
        SupervisedWindow w;
        for (int s = 0; s < kSequenceLength; ++s) {
            const auto& iv = ivs[t - static_cast<std::size_t>(kSequenceLength - s)];
            w.input[s][0] = iv.mean_power;
            w.input[s][1] = iv.mean_voltage;
            w.input[s][2] = iv.mean_current;
            w.input[s][3] = iv.mean_ec;
            w.input[s][4] = iv.mean_temp;
            w.input[s][5] = iv.mean_vwc;
            w.input[s][6] = (iv.interval_start - deployment_start) / 86400.0;
            w.input[s][7] = std::fmod(std::fmod(iv.interval_start, 86400.0) + 86400.0, 86400.0) / 3600.0;
        }
        w.target[0] = ivs[t].mean_voltage;
        w.target[1] = ivs[t].mean_current;
        w.target[2] = ivs[t].mean_power;
        w.target_interval_start = ivs[t].interval_start;
        out.windows.push_back(w);
    }
    if (out.windows.empty()) throw std::runtime_error("insufficient history");
    return out;
}

namespace {

SupervisedDataset slice(const SupervisedDataset& ds, std::size_t begin, std::size_t end) {
    SupervisedDataset out;
    out.horizon = ds.horizon;
    out.windows.assign(ds.windows.begin() + static_cast<std::ptrdiff_t>(begin),
                       ds.windows.begin() + static_cast<std::ptrdiff_t>(end));
    return out;
}

}  // namespace

ChronoSplit split_chrono(const SupervisedDataset& dataset, const SplitSpec& spec) {
    const std::size_t n = dataset.windows.size();
    if (n == 0) throw std::runtime_error("cannot split empty dataset");
    if (spec.train_fraction <= 0 || spec.val_fraction <= 0 || spec.test_fraction <= 0 ||
        spec.train_fraction + spec.val_fraction + spec.test_fraction > 1.0 + 1e-12)
        throw std::runtime_error("invalid split fractions");

    const std::size_t n_train = static_cast<std::size_t>(std::floor(n * spec.train_fraction));
    const std::size_t n_val = static_cast<std::size_t>(std::floor(n * spec.val_fraction));
    if (n_train == 0) throw std::runtime_error("train slice empty");
    if (n_val == 0) throw std::runtime_error("val slice empty");
    if (n_train + n_val >= n) throw std::runtime_error("test slice empty");

    ChronoSplit out;
    out.train = slice(dataset, 0, n_train);
    out.val = slice(dataset, n_train, n_train + n_val);
    out.test = slice(dataset, n_train + n_val, n);  // remainder goes to the last slice
    return out;
}

std::vector<TscvFold> tscv_folds(const SupervisedDataset& dataset) {
    const std::size_t n = dataset.windows.size();
    if (n < 10) throw std::runtime_error("dataset too small for 4 walk-forward folds");

    std::vector<TscvFold> folds;
    const std::size_t tenth = static_cast<std::size_t>(std::floor(n * 0.10));
    for (int k = 1; k <= 4; ++k) {
        const std::size_t n_train = static_cast<std::size_t>(std::floor(n * 0.20 * k));
        TscvFold fold;
        fold.train = slice(dataset, 0, n_train);
        fold.naive_history = slice(dataset, n_train, n_train + tenth);
        fold.test = slice(dataset, n_train + tenth, n_train + 2 * tenth);
        folds.push_back(std::move(fold));
    }
    return folds;
}

}  // namespace smfc
