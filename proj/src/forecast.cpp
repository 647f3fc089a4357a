#include "forecast.hpp"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <ostream>
#include <stdexcept>
#include <thread>
#include <vector>

namespace smfc::forecast {

namespace {

constexpr char kMagic[8] = {'S', 'M', 'F', 'C', 'Q', 'E', 'N', 'S'};
constexpr std::uint32_t kFormatVersion = 1;

std::uint32_t crc32_update(std::uint32_t crc, const void* data, std::size_t len) {
    static std::uint32_t table[256];
    static bool init = false;
    if (!init) {
        for (std::uint32_t i = 0; i < 256; ++i) {
            std::uint32_t c = i;
            for (int k = 0; k < 8; ++k) c = (c & 1) ? 0xedb88320u ^ (c >> 1) : c >> 1;
            table[i] = c;
        }
        init = true;
    }
    const auto* p = static_cast<const unsigned char*>(data);
    crc ^= 0xffffffffu;
    for (std::size_t i = 0; i < len; ++i) crc = table[(crc ^ p[i]) & 0xff] ^ (crc >> 8);
    return crc ^ 0xffffffffu;
}

struct Writer {
    std::vector<unsigned char> bytes;

    void raw(const void* data, std::size_t len) {
        const auto* p = static_cast<const unsigned char*>(data);
        bytes.insert(bytes.end(), p, p + len);
    }
    void u32(std::uint32_t v) {
        unsigned char b[4];
        for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
        raw(b, 4);
    }
    void u64(std::uint64_t v) {
        unsigned char b[8];
        for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
        raw(b, 8);
    }
    void f64(double v) {
        std::uint64_t bits;
        std::memcpy(&bits, &v, 8);
        u64(bits);
    }
};

struct Reader {
    const unsigned char* p;
    const unsigned char* end;

    void need(std::size_t n) const {
        if (static_cast<std::size_t>(end - p) < n)
            throw std::runtime_error("model file truncated");
    }
    std::uint32_t u32() {
        need(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(p[i]) << (8 * i);
        p += 4;
        return v;
    }
    std::uint64_t u64() {
        need(8);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(p[i]) << (8 * i);
        p += 8;
        return v;
    }
    double f64() {
        const std::uint64_t bits = u64();
        double v;
        std::memcpy(&v, &bits, 8);
        return v;
    }
};

void write_model(Writer& w, const neural::TrainedModel& model) {
    w.u32(static_cast<std::uint32_t>(model.config.input_size));
    w.u32(static_cast<std::uint32_t>(model.config.hidden_size));
    w.u32(static_cast<std::uint32_t>(model.config.output_size));
    w.u32(static_cast<std::uint32_t>(model.config.sequence_length));
    w.f64(model.config.alpha);
    w.u64(model.config.seed);
    w.u32(static_cast<std::uint32_t>(model.summary.epochs_run));
    w.u32(static_cast<std::uint32_t>(model.summary.best_epoch));
    w.f64(model.summary.final_train_loss);
    w.f64(model.summary.best_val_loss);
    w.u64(model.weights.size());
    for (double p : model.weights.flat()) w.f64(p);
}

neural::TrainedModel read_model(Reader& r) {
    neural::TrainedModel model;
    model.config.input_size = static_cast<int>(r.u32());
    model.config.hidden_size = static_cast<int>(r.u32());
    model.config.output_size = static_cast<int>(r.u32());
    model.config.sequence_length = static_cast<int>(r.u32());
    model.config.alpha = r.f64();
    model.config.seed = r.u64();
    model.summary.epochs_run = static_cast<int>(r.u32());
    model.summary.best_epoch = static_cast<int>(r.u32());
    model.summary.final_train_loss = r.f64();
    model.summary.best_val_loss = r.f64();
    const std::uint64_t count = r.u64();
    model.weights = neural::LstmWeights(model.config);
    if (count != model.weights.size()) throw std::runtime_error("model file parameter count mismatch");
    for (auto& p : model.weights.flat()) p = r.f64();
    return model;
}

}  // namespace

std::uint64_t dataset_fingerprint(const SupervisedDataset& dataset) {
    // FNV-1a over the window bytes
    std::uint64_t hash = 0xcbf29ce484222325ull;
    auto mix = [&](const void* data, std::size_t len) {
        const auto* p = static_cast<const unsigned char*>(data);
        for (std::size_t i = 0; i < len; ++i) {
            hash ^= p[i];
            hash *= 0x100000001b3ull;
        }
    };
    mix(&dataset.horizon, sizeof(dataset.horizon));
    for (const auto& w : dataset.windows) {
        mix(w.input, sizeof(w.input));
        mix(w.target, sizeof(w.target));
        mix(&w.target_interval_start, sizeof(w.target_interval_start));
    }
    return hash;
}

QuantileEnsemble train_ensemble(const SupervisedDataset& train, const SupervisedDataset& val,
                                const neural::ModelConfig& model_config,
                                const neural::TrainConfig& train_config, double lower_alpha,
                                double upper_alpha) {
    if (train.horizon != val.horizon)
        throw std::runtime_error("train/val horizons differ");

    const double alphas[3] = {lower_alpha, 0.5, upper_alpha};
    neural::TrainedModel models[3];
    std::exception_ptr errors[3] = {};
    std::vector<std::thread> workers;
    for (int q = 0; q < 3; ++q) {
        workers.emplace_back([&, q] {
            try {
                neural::ModelConfig cfg = model_config;
                cfg.alpha = alphas[q];
                cfg.seed = model_config.seed + static_cast<std::uint64_t>(q);
                models[q] = neural::train(train, val, cfg, train_config);
            } catch (...) {
                errors[q] = std::current_exception();
            }
        });
    }
    for (auto& w : workers) w.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);

    QuantileEnsemble ensemble;
    ensemble.horizon = train.horizon;
    ensemble.lower_alpha = lower_alpha;
    ensemble.upper_alpha = upper_alpha;
    ensemble.lower = std::move(models[0]);
    ensemble.median = std::move(models[1]);
    ensemble.upper = std::move(models[2]);
    ensemble.fingerprint = dataset_fingerprint(train);
    return ensemble;
}

ForecastSeries forecast_series(const QuantileEnsemble& ensemble, const SupervisedDataset& test) {
    if (ensemble.horizon != test.horizon)
        throw std::runtime_error("ensemble/test horizon mismatch");
    ForecastSeries series;
    series.horizon = test.horizon;
    series.forecasts.reserve(test.windows.size());
    const neural::TrainedModel* models[3] = {&ensemble.lower, &ensemble.median, &ensemble.upper};
    for (const auto& window : test.windows) {
        QuantileForecast f;
        f.target_interval_start = window.target_interval_start;
        for (int q = 0; q < 3; ++q) neural::predict(*models[q], window, f.values[q]);
        series.forecasts.push_back(f);
    }
    return series;
}

void save_ensemble(const QuantileEnsemble& ensemble, const std::string& path) {
    Writer w;
    w.raw(kMagic, sizeof(kMagic));
    w.u32(kFormatVersion);
    w.f64(ensemble.horizon);
    w.f64(ensemble.lower_alpha);
    w.f64(ensemble.upper_alpha);
    w.u64(ensemble.fingerprint);
    write_model(w, ensemble.lower);
    write_model(w, ensemble.median);
    write_model(w, ensemble.upper);
    w.u32(crc32_update(0, w.bytes.data(), w.bytes.size()));

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write model file: " + path);
    out.write(reinterpret_cast<const char*>(w.bytes.data()),
              static_cast<std::streamsize>(w.bytes.size()));
    if (!out) throw std::runtime_error("write failed: " + path);
}

QuantileEnsemble load_ensemble(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open model file: " + path);
    std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                     std::istreambuf_iterator<char>());
    if (bytes.size() < sizeof(kMagic) + 8) throw std::runtime_error("model file truncated");

    const std::size_t body = bytes.size() - 4;
    Reader tail{bytes.data() + body, bytes.data() + bytes.size()};
    const std::uint32_t stored_crc = tail.u32();
    if (crc32_update(0, bytes.data(), body) != stored_crc)
        throw std::runtime_error("model file checksum mismatch");

    Reader r{bytes.data(), bytes.data() + body};
    r.need(sizeof(kMagic));
    if (std::memcmp(r.p, kMagic, sizeof(kMagic)) != 0)
        throw std::runtime_error("not a model file (bad magic)");
    r.p += sizeof(kMagic);
    const std::uint32_t version = r.u32();
    if (version != kFormatVersion)
        throw std::runtime_error("model format version mismatch: found " +
                                 std::to_string(version) + ", expected " +
                                 std::to_string(kFormatVersion));

    QuantileEnsemble ensemble;
    ensemble.horizon = r.f64();
    ensemble.lower_alpha = r.f64();
    ensemble.upper_alpha = r.f64();
    ensemble.fingerprint = r.u64();
    ensemble.lower = read_model(r);
    ensemble.median = read_model(r);
    ensemble.upper = read_model(r);
    return ensemble;
}

CrossingRates quantile_crossing_rate(const ForecastSeries& series) {
    if (series.forecasts.empty())
        throw std::runtime_error("crossing rate undefined for empty series");
    CrossingRates rates;
    for (const auto& f : series.forecasts)
        for (int k = 0; k < kTargetCount; ++k)
            if (f.values[0][k] > f.values[1][k] || f.values[1][k] > f.values[2][k])
                rates.per_output[k] += 1.0;
    for (auto& r : rates.per_output) r /= static_cast<double>(series.forecasts.size());
    return rates;
}

void export_forecast(const ForecastSeries& series, const SupervisedDataset& test,
                     std::ostream& out) {
    if (series.forecasts.size() != test.windows.size())
        throw std::runtime_error("forecast/test length mismatch");
    out << "interval_start,v_lo,v_med,v_hi,i_lo,i_med,i_hi,p_lo,p_med,p_hi,"
           "v_true,i_true,p_true\n";
    char buf[512];
    for (std::size_t i = 0; i < series.forecasts.size(); ++i) {
        const auto& f = series.forecasts[i];
        const auto& w = test.windows[i];
        std::snprintf(buf, sizeof(buf),
                      "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,"
                      "%.17g,%.17g,%.17g\n",
                      f.target_interval_start, f.values[0][0], f.values[1][0], f.values[2][0],
                      f.values[0][1], f.values[1][1], f.values[2][1], f.values[0][2],
                      f.values[1][2], f.values[2][2], w.target[0], w.target[1], w.target[2]);
        out << buf;
    }
}

}  // namespace smfc::forecast
