#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "charc/substrate.hpp"

namespace charc {

enum class TaskId { Narma10, Narma30, Laser, Nce };

std::string_view to_string(TaskId id);
/// Accepts exactly narma10, narma30, laser and nce.
TaskId task_from_string(std::string_view name);

/// Input/target sequences with ordered, disjoint splits:
/// train [0, train_end), validation [train_end, validation_end), test [validation_end, size()).
struct TaskDataset {
    TaskId id = TaskId::Narma10;
    std::vector<double> input;
    std::vector<double> target;
    std::size_t train_end = 0;
    std::size_t validation_end = 0;
    std::string metadata; ///< e.g. the normalisation applied to laser data

    std::size_t size() const { return input.size(); }
    /// Sets the split boundaries from fractions of size().
    void split(double train_fraction, double validation_fraction);
    void validate() const;
};

inline constexpr double kDefaultTrainFraction = 0.5;
inline constexpr double kDefaultValidationFraction = 0.25;

struct NarmaConstants {
    double alpha, beta, delta, gamma;
};

/// alpha, beta, delta, gamma for order 10 or 30.
NarmaConstants narma_constants(int order);

/// Targets y(t+1) for t = 0..u.size()-1 of the order-n NARMA recurrence with
/// zero initial history: y(t+1) = gamma * (alpha y(t) + beta y(t) sum_{i<n} y(t-i)
/// + 1.5 u(t-n+1) u(t) + delta).
std::vector<double> narma_series(int order, std::span<const double> u);

/// Input u ~ U[0, 0.5]. Regenerates from a derived seed when |y| exceeds 10
/// and gives up with NumericalError after five retries.
TaskDataset gen_narma(int order, std::size_t length, std::uint64_t seed);

/// Linear channel q(n) for every n of `d`, with d treated as zero outside its range.
std::vector<double> nce_channel(std::span<const double> d);

/// u = q + 0.036 q^2 - 0.011 q^3
double nce_nonlinearity(double q);

/// Builds the equalisation dataset from a symbol sequence: input u(n) + 30,
/// target d(n - 2). Samples lacking full filter support (7 behind, 2 ahead)
/// are dropped, so the result has d.size() - 9 rows.
TaskDataset nce_from_symbols(std::span<const double> d);

/// Symbols drawn i.i.d. from {-3, -1, +1, +3}.
TaskDataset gen_nce(std::size_t length, std::uint64_t seed);

/// Santa Fe laser series, one numeric sample per line. Values are min-max
/// scaled to [0, 1]; input is the current sample and target the next one.
TaskDataset load_laser(const std::filesystem::path& path);

/// Default laser location: $CHARC_DATA_DIR/santafe_laser.txt, or ./data/santafe_laser.txt.
std::filesystem::path default_laser_path();

inline const std::vector<double> kDefaultLambdaGrid{0.0, 1e-8, 1e-6, 1e-4, 1e-2};

struct RowRange {
    std::size_t begin = 0;
    std::size_t end = 0;
};

struct TaskEvaluation {
    double nmse = 1.0;
    double lambda = 0.0;
    bool degenerate = false;
    RowRange train_rows;      ///< dataset rows the readout was fitted on
    RowRange validation_rows; ///< rows used only to pick lambda
    RowRange test_rows;       ///< rows scored for the reported NMSE
};

/// Runs the substrate on the whole input, drops `washout` steps, fits readouts
/// on the train split for every lambda in the grid, keeps the one with the
/// lowest validation NMSE and reports its test NMSE. A degenerate run reports
/// NMSE 1.
TaskEvaluation evaluate_task(const Substrate& substrate, const Genotype& genotype, const TaskDataset& dataset,
                             std::size_t washout, std::span<const double> lambda_grid = kDefaultLambdaGrid);

/// CSV with columns t,u,y,split.
void write_dataset_csv(std::ostream& os, const TaskDataset& dataset);

}  // namespace charc
