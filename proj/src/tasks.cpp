#include "charc/tasks.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <ostream>

#include "charc/error.hpp"
#include "charc/readout.hpp"
#include "charc/rng.hpp"

namespace charc {

std::string_view to_string(TaskId id)
{
    switch (id) {
    case TaskId::Narma10: return "narma10";
    case TaskId::Narma30: return "narma30";
    case TaskId::Laser: return "laser";
    case TaskId::Nce: return "nce";
    }
    return "unknown";
}

TaskId task_from_string(std::string_view name)
{
    if (name == "narma10") return TaskId::Narma10;
    if (name == "narma30") return TaskId::Narma30;
    if (name == "laser") return TaskId::Laser;
    if (name == "nce") return TaskId::Nce;
    throw ConfigError("unknown task '" + std::string(name) + "' (expected narma10, narma30, laser or nce)");
}

void TaskDataset::split(double train_fraction, double validation_fraction)
{
    if (!(train_fraction > 0 && validation_fraction > 0 && train_fraction + validation_fraction < 1))
        throw ConfigError("split fractions must be positive and leave room for a test split");
    const double n = static_cast<double>(size());
    train_end = static_cast<std::size_t>(std::floor(n * train_fraction));
    validation_end = static_cast<std::size_t>(std::floor(n * (train_fraction + validation_fraction)));
}

void TaskDataset::validate() const
{
    if (input.size() != target.size()) throw DataError("task input and target lengths differ");
    if (!(train_end > 0 && train_end < validation_end && validation_end < size()))
        throw DataError("task splits must be non-empty, disjoint and ordered");
}

NarmaConstants narma_constants(int order)
{
    if (order == 10) return {0.3, 0.05, 0.1, 1.0};
    if (order == 30) return {0.2, 0.004, 0.001, 1.0};
    throw ConfigError("NARMA order must be 10 or 30");
}

std::vector<double> narma_series(int order, std::span<const double> u)
{
    const NarmaConstants c = narma_constants(order);
    const auto n = static_cast<std::size_t>(order);
    // y[t] is y(t); y(0) and earlier are zero.
    std::vector<double> y(u.size() + 1, 0.0);
    double window = 0.0; // sum_{i<n} y(t - i)
    for (std::size_t t = 0; t < u.size(); ++t) {
        window += y[t];
        if (t >= n) window -= y[t - n];
        const double lagged = t + 1 >= n ? u[t + 1 - n] : 0.0;
        y[t + 1] = c.gamma * (c.alpha * y[t] + c.beta * y[t] * window + 1.5 * lagged * u[t] + c.delta);
    }
    return {y.begin() + 1, y.end()};
}

TaskDataset gen_narma(int order, std::size_t length, std::uint64_t seed)
{
    if (length <= static_cast<std::size_t>(order)) throw ConfigError("NARMA length must exceed the order");
    constexpr int kMaxRetries = 5;
    for (int attempt = 0; attempt <= kMaxRetries; ++attempt) {
        Rng rng(attempt == 0 ? seed : derive_seed(seed, static_cast<std::uint64_t>(attempt)));
        std::vector<double> u(length);
        for (auto& v : u) v = rng.uniform(0.0, 0.5);
        std::vector<double> y = narma_series(order, u);
        const bool diverged = std::any_of(y.begin(), y.end(), [](double v) { return !std::isfinite(v) || std::abs(v) > 10.0; });
        if (diverged) continue;
        TaskDataset ds;
        ds.id = order == 10 ? TaskId::Narma10 : TaskId::Narma30;
        ds.input = std::move(u);
        ds.target = std::move(y);
        ds.split(kDefaultTrainFraction, kDefaultValidationFraction);
        ds.metadata = "seed=" + std::to_string(seed) + " attempt=" + std::to_string(attempt);
        return ds;
    }
    throw NumericalError("NARMA-" + std::to_string(order) + " diverged on every retry");
}

namespace {
// Taps for d(n+2) .. d(n-7).
constexpr std::array<double, 10> kChannelTaps{0.08, -0.12, 1.0, 0.18, -0.1, 0.091, -0.05, 0.04, 0.03, 0.01};
constexpr std::size_t kLead = 2;
constexpr std::size_t kLag = 7;
}  // namespace

std::vector<double> nce_channel(std::span<const double> d)
{
    const auto len = static_cast<std::ptrdiff_t>(d.size());
    std::vector<double> q(d.size(), 0.0);
    for (std::ptrdiff_t n = 0; n < len; ++n) {
        double acc = 0.0;
        for (std::size_t k = 0; k < kChannelTaps.size(); ++k) {
            const std::ptrdiff_t idx = n + static_cast<std::ptrdiff_t>(kLead) - static_cast<std::ptrdiff_t>(k);
            if (idx >= 0 && idx < len) acc += kChannelTaps[k] * d[static_cast<std::size_t>(idx)];
        }
        q[static_cast<std::size_t>(n)] = acc;
    }
    return q;
}

double nce_nonlinearity(double q)
{
    return q + 0.036 * q * q - 0.011 * q * q * q;
}

TaskDataset nce_from_symbols(std::span<const double> d)
{
    if (d.size() <= kLead + kLag + 1) throw ConfigError("NCE needs more than 10 symbols");
    const std::vector<double> q = nce_channel(d);
    TaskDataset ds;
    ds.id = TaskId::Nce;
    for (std::size_t n = kLag; n + kLead < d.size(); ++n) {
        ds.input.push_back(nce_nonlinearity(q[n]) + 30.0);
        ds.target.push_back(d[n - 2]);
    }
    ds.split(kDefaultTrainFraction, kDefaultValidationFraction);
    return ds;
}

TaskDataset gen_nce(std::size_t length, std::uint64_t seed)
{
    if (length <= 10) throw ConfigError("NCE length must exceed the filter span");
    static constexpr std::array<double, 4> kSymbols{-3.0, -1.0, 1.0, 3.0};
    Rng rng(seed);
    std::vector<double> d(length);
    for (auto& v : d) v = kSymbols[rng.below(kSymbols.size())];
    TaskDataset ds = nce_from_symbols(d);
    ds.metadata = "seed=" + std::to_string(seed);
    return ds;
}

std::filesystem::path default_laser_path()
{
    const char* dir = std::getenv("CHARC_DATA_DIR");
    return std::filesystem::path(dir && *dir ? dir : "data") / "santafe_laser.txt";
}

TaskDataset load_laser(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw DataError("laser data not found at '" + path.string() +
                        "'; download the Santa Fe time-series competition dataset A (UCI repository) "
                        "as plain text, one sample per line, or set CHARC_DATA_DIR");
    std::vector<double> values;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos) continue;
        const auto last = line.find_last_not_of(" \t\r");
        const char* b = line.data() + first;
        const char* e = line.data() + last + 1;
        double v = 0.0;
        const auto [ptr, ec] = std::from_chars(b, e, v);
        if (ec != std::errc{} || ptr != e || !std::isfinite(v))
            throw DataError(path.string() + ":" + std::to_string(line_no) + ": not a number: '" + line + "'");
        values.push_back(v);
    }
    if (values.size() < 2) throw DataError("laser file '" + path.string() + "' needs at least two samples");
    const auto [mn, mx] = std::minmax_element(values.begin(), values.end());
    const double lo = *mn, hi = *mx;
    if (!(hi > lo)) throw DataError("laser file '" + path.string() + "' is constant");
    for (auto& v : values) v = (v - lo) / (hi - lo);

    TaskDataset ds;
    ds.id = TaskId::Laser;
    ds.input.assign(values.begin(), values.end() - 1);
    ds.target.assign(values.begin() + 1, values.end());
    if (ds.size() >= 4) ds.split(kDefaultTrainFraction, kDefaultValidationFraction);
    char buf[128];
    std::snprintf(buf, sizeof buf, "minmax lo=%.17g hi=%.17g", lo, hi);
    ds.metadata = buf;
    return ds;
}

TaskEvaluation evaluate_task(const Substrate& substrate, const Genotype& genotype, const TaskDataset& dataset,
                             std::size_t washout, std::span<const double> lambda_grid)
{
    dataset.validate();
    if (washout >= dataset.train_end) throw ConfigError("washout must be shorter than the train split");
    if (lambda_grid.empty()) throw ConfigError("lambda grid is empty");

    TaskEvaluation ev;
    ev.train_rows = {washout, dataset.train_end};
    ev.validation_rows = {dataset.train_end, dataset.validation_end};
    ev.test_rows = {dataset.validation_end, dataset.size()};

    const StateMatrix states = substrate.run(genotype, dataset.input, washout);
    if (states.degenerate() || !states.all_finite()) {
        ev.degenerate = true;
        ev.nmse = 1.0;
        return ev;
    }
    // State row r corresponds to dataset row r + washout.
    auto local = [&](std::size_t dataset_row) { return dataset_row - washout; };
    auto slice = [&](RowRange r) {
        return std::span<const double>(dataset.target.data() + r.begin, r.end - r.begin);
    };

    const RidgeSolver solver(states, local(ev.train_rows.begin), local(ev.train_rows.end));
    double best_val = std::numeric_limits<double>::infinity();
    Readout best;
    for (double lambda : lambda_grid) {
        Readout r = solver.solve(slice(ev.train_rows), lambda);
        const auto pred = r.predict(states, local(ev.validation_rows.begin), local(ev.validation_rows.end));
        const double val = nmse(pred, slice(ev.validation_rows));
        if (std::isfinite(val) && val < best_val) {
            best_val = val;
            best = std::move(r);
        }
    }
    if (best.weights.empty()) {
        ev.degenerate = true;
        ev.nmse = 1.0;
        return ev;
    }
    ev.lambda = best.lambda;
    const auto pred = best.predict(states, local(ev.test_rows.begin), local(ev.test_rows.end));
    ev.nmse = nmse(pred, slice(ev.test_rows));
    if (!std::isfinite(ev.nmse)) {
        ev.degenerate = true;
        ev.nmse = 1.0;
    }
    return ev;
}

void write_dataset_csv(std::ostream& os, const TaskDataset& dataset)
{
    os << "t,u,y,split\n";
    char buf[96];
    for (std::size_t t = 0; t < dataset.size(); ++t) {
        const char* split = t < dataset.train_end ? "train" : t < dataset.validation_end ? "validation" : "test";
        std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g,", t, dataset.input[t], dataset.target[t]);
        os << buf << split << '\n';
    }
}

}  // namespace charc
