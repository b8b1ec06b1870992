#pragma once

#include <optional>
#include <string>
#include <vector>

#include "fisherplane/data_io.hpp"
#include "fisherplane/estimators.hpp"
#include "fisherplane/objectives.hpp"

namespace fisherplane {

enum class Objective { kVae, kFae, kMae };

std::string objective_name(Objective o);
Objective objective_from_name(const std::string& name);

struct RunConfig {
    Objective objective = Objective::kVae;
    Likelihood likelihood = Likelihood::kBernoulli;

    // FAE penalties (per-dimension targets); ignored for vae/mae.
    double lambda_z = 1.0;
    double lambda_x = 0.0;
    double f_z = 0.0;
    double f_x = 0.0;
    // MAE penalty; ignored otherwise.
    double mae_c = 1.0;
    double mae_m = 0.0;

    std::size_t epochs = 30;
    std::size_t batch_size = 128;
    double lr = 1e-3;
    std::uint64_t seed = 1;
    std::size_t eval_every = 1;
    std::size_t latent_dim = 40;
    std::vector<std::size_t> hidden = {300, 300, 300, 300, 300};
    // Appendix-B style depth sweep: n linear layers of width 300 per net.
    std::optional<std::size_t> depth_override;
    std::size_t max_steps = 0;     // 0 = unlimited; caps total optimizer steps
    std::size_t eval_subset = 1000;  // eval examples for the FS trace
    std::size_t final_nll_k = 0;   // >0: IWAE K for a final-epoch NLL estimate
    double clip_norm = 100.0;
    std::string out_dir;  // empty: no files written

    void validate() const;
    std::vector<std::size_t> hidden_dims() const;
};

struct EpochRecord {
    std::size_t epoch = 0;  // 1-based
    LossReport mean;        // step-averaged loss terms
    bool has_eval = false;
    InfoPoint point;
    double eval_elbo = 0.0;
    std::optional<NllEstimate> nll;
};

struct RunLog {
    std::vector<EpochRecord> epochs;
    FsTrace trace;
    std::size_t clamp_events = 0;
    std::size_t clip_events = 0;
    double wall_seconds = 0.0;
    int status = 0;  // 0 ok, 3 numeric abort
    std::string status_message;
};

struct TrainResult {
    Checkpoint checkpoint;
    RunLog log;
};

// Everything mutated by the optimization loop.
struct TrainState {
    VaeModel model;
    std::optional<Mlp> aux;  // MAE recognition net
    Adam adam;
};

Checkpoint make_checkpoint(const TrainState& state, const RunConfig& run, std::size_t epoch);
TrainState restore_state(const Checkpoint& ckpt, const RunConfig& run);
VaeModel model_from_checkpoint(const Checkpoint& ckpt);

// Deterministic in seed. Writes runlog.jsonl and checkpoint.bin under
// run.out_dir when set. On a numeric error the loop aborts with status 3 and
// the checkpoint of the last completed epoch is returned.
TrainResult train(const RunConfig& run, const Dataset& train_data, const Dataset& eval_data);

// Continue a checkpointed run up to run.epochs total epochs.
TrainResult train_resume(const RunConfig& run, const Checkpoint& ckpt, const Dataset& train_data,
                         const Dataset& eval_data);

// JSONL emission, one epoch object per line; numbers at 17 significant
// digits so reruns are byte-identical and parse back exactly.
std::string runlog_to_jsonl(const RunLog& log);

struct RunSummary {
    std::string name;
    double nll = 0.0;
    double nll_std_err = 0.0;
    double elbo = 0.0;
    InfoPoint point;
    bool significantly_worse_than_best = false;
};

// Final NLL/ELBO/InfoPoint per run, sorted best-NLL first, with a 2-sigma
// bootstrap significance flag against the best run.
std::vector<RunSummary> compare_runs(const std::vector<std::pair<std::string, RunLog>>& logs);

std::string format_double17(double v);

}  // namespace fisherplane
