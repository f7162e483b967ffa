#pragma once

// Novelty search driven by a steady-state microbial GA. Each generation runs
// one two-parent tournament in which novelty (sparseness against the current
// population and the archive) decides the winner; the loser is overwritten by
// an infected and mutated copy. Every evaluated individual is streamed to a
// database sink; sufficiently novel offspring enter the archive.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "charc/measures.hpp"
#include "charc/rng.hpp"
#include "charc/substrate.hpp"

namespace charc {

struct NsParams {
    std::size_t generations = 2000;
    std::size_t population = 200;
    std::size_t deme = 40;
    double recombination_rate = 0.5;
    double mutation_rate = 0.1;
    double rho_min = 3.0;
    std::size_t rho_update_interval = 200;
    std::size_t k = 15;
    /// Chance that an offspring enters the archive regardless of novelty.
    double random_admission = 0.0;
    /// Maximum archive size; the oldest entries are dropped first. 0 = unbounded.
    std::size_t archive_limit = 0;

    void validate() const;
};

struct SearchIndividual {
    Genotype genotype;
    BehaviourPoint behaviour;
    std::size_t generation = 0;
    std::size_t run_id = 0;
    std::size_t slot = 0; ///< population index the individual occupied when created
};

/// Behaviours stored column-wise so distance batches vectorise.
class BehaviourSet {
public:
    void push_back(const BehaviourPoint& p);
    void set(std::size_t i, const BehaviourPoint& p);
    void erase_front(std::size_t count);
    std::size_t size() const { return kr_.size(); }
    bool empty() const { return kr_.empty(); }
    BehaviourPoint operator[](std::size_t i) const { return {kr_[i], gr_[i], mc_[i], false}; }

    /// Euclidean distances from `q` to every stored point, appended to `out`.
    void distances_to(const BehaviourPoint& q, std::vector<double>& out) const;

private:
    std::vector<double> kr_, gr_, mc_;
};

/// Mean Euclidean distance from `x` to its k nearest neighbours in `others`
/// (k capped at |others|). Infinite when `others` is empty.
double sparseness(const BehaviourPoint& x, std::span<const BehaviourPoint> others, std::size_t k);

/// Same rule over the union of a population (skipping index `exclude`) and an archive.
double sparseness(const BehaviourPoint& x, const BehaviourSet& population, std::size_t exclude,
                  const BehaviourSet& archive, std::size_t k);

/// Raises the threshold by 20% when more than 10 individuals were admitted
/// during the interval, lowers it by 5% when none were, else leaves it.
double update_rho_min(double rho_min, std::size_t added);

struct ArchiveEntry {
    BehaviourPoint behaviour;
    std::size_t generation = 0;
    double rho_min = 0.0;   ///< threshold in force at admission
    double sparseness = std::numeric_limits<double>::quiet_NaN(); ///< NaN for the seeded initial population
    bool initial = false;
};

/// One generation's tournament, kept when tracing is enabled.
struct TournamentRecord {
    std::size_t generation = 0;
    std::size_t first = 0;
    std::size_t second = 0;
    std::size_t winner = 0;
    double first_sparseness = 0.0;
    double second_sparseness = 0.0;
    double child_sparseness = 0.0;
    bool admitted = false;
    double rho_min = 0.0;
    Genotype child;
    BehaviourPoint child_behaviour;
};

using BehaviourFn = std::function<BehaviourPoint(const Genotype&)>;
using RecordSink = std::function<void(const SearchIndividual&)>;

class NoveltySearch {
public:
    NoveltySearch(NsParams params, std::size_t gene_count, BehaviourFn evaluate, std::uint64_t seed,
                  std::size_t run_id = 0, RecordSink sink = {});

    /// Random initial population, copied into the archive and the database.
    void initialise();
    /// One tournament generation. Requires initialise() (or a resumed state).
    void step();
    /// initialise() when needed, then steps until `generations` have run.
    void run();

    const NsParams& params() const { return params_; }
    /// Changes the stopping generation, e.g. to extend a resumed search.
    void set_generations(std::size_t generations) { params_.generations = generations; }
    std::size_t generation() const { return generation_; }
    double rho_min() const { return rho_min_; }
    std::size_t database_size() const { return database_size_; }
    std::size_t sparseness_evaluations() const { return sparseness_evaluations_; }
    std::size_t evaluations() const { return evaluations_; }
    const std::vector<SearchIndividual>& population() const { return population_; }
    const std::vector<ArchiveEntry>& archive() const { return archive_log_; }
    std::size_t archive_size() const { return archive_.size(); }

    void enable_trace(bool on) { trace_enabled_ = on; }
    const std::vector<TournamentRecord>& trace() const { return trace_; }

    /// Full search state as a JSON document, sufficient to resume.
    std::string checkpoint() const;
    static NoveltySearch resume(const std::string& checkpoint, BehaviourFn evaluate, RecordSink sink = {});

private:
    BehaviourPoint evaluate_safely(const Genotype& g);
    void emit(const SearchIndividual& ind);
    void admit(const BehaviourPoint& b, std::size_t generation, double sparseness, bool initial);
    double population_sparseness(const BehaviourPoint& x, std::size_t exclude);

    NsParams params_;
    std::size_t gene_count_;
    BehaviourFn evaluate_;
    RecordSink sink_;
    Rng rng_;
    std::size_t run_id_;

    std::vector<SearchIndividual> population_;
    BehaviourSet population_points_;
    BehaviourSet archive_;
    std::vector<ArchiveEntry> archive_log_;

    bool initialised_ = false;
    std::size_t generation_ = 0;
    double rho_min_ = 0.0;
    std::size_t added_in_interval_ = 0;
    std::size_t database_size_ = 0;
    std::size_t sparseness_evaluations_ = 0;
    std::size_t evaluations_ = 0;

    bool trace_enabled_ = false;
    std::vector<TournamentRecord> trace_;
};

/// Evaluates `evals` uniform random genotypes. Record i is stamped with the
/// generation at which a novelty search with `population` individuals would
/// have made its i-th evaluation (0 for the first `population`), so coverage
/// curves of the two searches line up at equal evaluation counts. Records are
/// streamed to `sink` when one is given and returned otherwise.
std::vector<SearchIndividual> random_search(std::size_t evals, std::size_t gene_count, const BehaviourFn& evaluate,
                                            std::uint64_t seed, std::size_t run_id = 0, std::size_t population = 200,
                                            const RecordSink& sink = {});

}  // namespace charc
