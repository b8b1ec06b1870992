#include "fisherplane/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

namespace fisherplane {

std::string objective_name(Objective o) {
    switch (o) {
        case Objective::kVae: return "vae";
        case Objective::kFae: return "fae";
        case Objective::kMae: return "mae";
    }
    return "vae";
}

Objective objective_from_name(const std::string& name) {
    if (name == "vae") return Objective::kVae;
    if (name == "fae") return Objective::kFae;
    if (name == "mae") return Objective::kMae;
    throw ContractError("unknown objective '" + name + "'");
}

void RunConfig::validate() const {
    if (batch_size == 0 || latent_dim == 0) {
        throw ContractError("RunConfig: batch_size and latent_dim must be positive");
    }
    if (lr <= 0.0) throw ContractError("RunConfig: lr must be positive");
    if (eval_every == 0) throw ContractError("RunConfig: eval_every must be positive");
    if (objective == Objective::kFae || objective == Objective::kVae) {
        FaeConfig cfg;
        cfg.lambda_z = objective == Objective::kVae ? 0.0 : lambda_z;
        cfg.lambda_x = objective == Objective::kVae ? 0.0 : lambda_x;
        cfg.f_z = f_z;
        cfg.f_x = f_x;
        cfg.likelihood = likelihood;
        cfg.validate();
    }
    if (depth_override && *depth_override < 1) {
        throw ContractError("RunConfig: depth_override must be >= 1");
    }
}

std::vector<std::size_t> RunConfig::hidden_dims() const {
    if (!depth_override) return hidden;
    // n layers total means n-1 hidden layers of width 300.
    return std::vector<std::size_t>(*depth_override - 1, 300);
}

namespace {

TrainState build_state(const RunConfig& run, std::size_t data_dim) {
    TrainState st;
    st.model = VaeModel::create(data_dim, run.hidden_dims(), run.latent_dim, run.likelihood,
                                derive_seed(run.seed, 0x90de1));
    st.adam = Adam(AdamConfig{run.lr, 0.9, 0.999, 1e-8});
    st.adam.register_parameters(st.model.parameters(), st.model.parameter_names());
    if (run.objective == Objective::kMae) {
        std::vector<std::size_t> aux_dims;
        aux_dims.push_back(data_dim);
        const auto hidden = run.hidden_dims();
        aux_dims.insert(aux_dims.end(), hidden.begin(), hidden.end());
        aux_dims.push_back(2 * run.latent_dim);
        st.aux = init_mlp(aux_dims, Activation::kTanh, derive_seed(run.seed, 0xa0de1));
        st.adam.register_parameters(st.aux->parameters(), st.aux->parameter_names("aux"));
    }
    return st;
}

std::vector<std::size_t> mlp_dims(const Mlp& net) {
    std::vector<std::size_t> dims;
    dims.push_back(net.in_dim());
    for (const LinearLayer& l : net.layers) dims.push_back(l.weight.shape()[0]);
    return dims;
}

}  // namespace

Checkpoint make_checkpoint(const TrainState& state, const RunConfig& run, std::size_t epoch) {
    Checkpoint c;
    c.encoder_dims = mlp_dims(state.model.encoder);
    c.decoder_dims = mlp_dims(state.model.decoder);
    if (state.aux) c.aux_dims = mlp_dims(*state.aux);
    c.activation = activation_name(state.model.encoder.activation);
    c.likelihood = likelihood_name(state.model.likelihood);
    c.latent_dim = state.model.latent_dim;
    c.rng_seed = run.seed;
    c.epoch = epoch;
    c.adam_step = state.adam.step_count();
    c.adam_lr = state.adam.config().lr;
    c.adam_beta1 = state.adam.config().beta1;
    c.adam_beta2 = state.adam.config().beta2;
    c.adam_eps = state.adam.config().eps;

    const auto& params = state.adam.parameters();
    const auto& names = state.adam.names();
    const auto& m = state.adam.first_moments();
    const auto& v = state.adam.second_moments();
    for (std::size_t i = 0; i < params.size(); ++i) {
        const auto d = params[i].data();
        c.arrays.emplace_back(names[i], std::vector<double>(d.begin(), d.end()));
    }
    for (std::size_t i = 0; i < params.size(); ++i) c.arrays.emplace_back(names[i] + ".m", m[i]);
    for (std::size_t i = 0; i < params.size(); ++i) c.arrays.emplace_back(names[i] + ".v", v[i]);
    return c;
}

VaeModel model_from_checkpoint(const Checkpoint& ckpt) {
    VaeModel m;
    m.latent_dim = ckpt.latent_dim;
    m.likelihood = likelihood_from_name(ckpt.likelihood);
    m.data_dim = ckpt.encoder_dims.front();
    m.encoder = init_mlp(ckpt.encoder_dims, activation_from_name(ckpt.activation), 0);
    m.decoder = init_mlp(ckpt.decoder_dims, activation_from_name(ckpt.activation), 0);
    m.validate();

    auto find_array = [&](const std::string& name) -> const std::vector<double>& {
        for (const auto& [n, data] : ckpt.arrays) {
            if (n == name) return data;
        }
        throw ParseError("checkpoint is missing array '" + name + "'");
    };
    auto load_net = [&](Mlp& net, const std::string& prefix) {
        const auto names = net.parameter_names(prefix);
        auto params = net.parameters();
        for (std::size_t i = 0; i < params.size(); ++i) {
            const auto& src = find_array(names[i]);
            if (src.size() != params[i].size()) {
                throw ParseError("checkpoint array '" + names[i] + "' length mismatch");
            }
            std::copy(src.begin(), src.end(), params[i].data_mut().begin());
        }
    };
    load_net(m.encoder, "encoder");
    load_net(m.decoder, "decoder");
    return m;
}

TrainState restore_state(const Checkpoint& ckpt, const RunConfig& run) {
    TrainState st;
    st.model = model_from_checkpoint(ckpt);
    if (!ckpt.aux_dims.empty()) {
        st.aux = init_mlp(ckpt.aux_dims, activation_from_name(ckpt.activation), 0);
    }
    st.adam = Adam(AdamConfig{ckpt.adam_lr, ckpt.adam_beta1, ckpt.adam_beta2, ckpt.adam_eps});
    st.adam.register_parameters(st.model.parameters(), st.model.parameter_names());
    if (st.aux) st.adam.register_parameters(st.aux->parameters(), st.aux->parameter_names("aux"));
    st.adam.set_step_count(ckpt.adam_step);

    auto find_array = [&](const std::string& name) -> const std::vector<double>& {
        for (const auto& [n, data] : ckpt.arrays) {
            if (n == name) return data;
        }
        throw ParseError("checkpoint is missing array '" + name + "'");
    };
    const auto& names = st.adam.names();
    auto& params = st.adam.parameters();
    for (std::size_t i = 0; i < names.size(); ++i) {
        const auto& value = find_array(names[i]);
        if (value.size() != params[i].size()) {
            throw ParseError("checkpoint array '" + names[i] + "' length mismatch");
        }
        std::copy(value.begin(), value.end(), params[i].data_mut().begin());
        st.adam.first_moments()[i] = find_array(names[i] + ".m");
        st.adam.second_moments()[i] = find_array(names[i] + ".v");
    }
    (void)run;
    return st;
}

namespace {

LossResult step_loss(Tape& tape, TrainState& st, const RunConfig& run, const Tensor& x, Rng& rng) {
    switch (run.objective) {
        case Objective::kVae: {
            FaeConfig cfg;
            cfg.likelihood = run.likelihood;
            return fae_loss(tape, st.model, x, cfg, rng);
        }
        case Objective::kFae: {
            FaeConfig cfg;
            cfg.lambda_z = run.lambda_z;
            cfg.lambda_x = run.lambda_x;
            cfg.f_z = run.f_z;
            cfg.f_x = run.f_x;
            cfg.likelihood = run.likelihood;
            return fae_loss(tape, st.model, x, cfg, rng);
        }
        case Objective::kMae: {
            MaeConfig cfg;
            cfg.c = run.mae_c;
            cfg.m = run.mae_m;
            cfg.aux = *st.aux;
            return mae_loss(tape, st.model, x, cfg, rng);
        }
    }
    throw ContractError("unreachable objective");
}

void write_text_atomic(const std::string& path, const std::string& text) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot open '" + tmp + "' for writing");
        out << text;
    }
    std::filesystem::rename(tmp, path);
}

TrainResult train_loop(const RunConfig& run, TrainState st, std::size_t start_epoch,
                       const Dataset& train_data, const Dataset& eval_data) {
    run.validate();
    train_data.validate();
    if (train_data.size() == 0) throw ContractError("train: empty dataset");
    const auto t0 = std::chrono::steady_clock::now();

    const Dataset eval_subset =
        eval_data.size() > run.eval_subset ? eval_data.take(run.eval_subset) : eval_data;

    TrainResult result;
    result.log.status = 0;
    Checkpoint last_good = make_checkpoint(st, run, start_epoch);
    std::vector<Tensor> all_params = st.adam.parameters();

    std::size_t total_steps = 0;
    bool stop = false;
    for (std::size_t epoch = start_epoch + 1; epoch <= run.epochs && !stop; ++epoch) {
        EpochRecord rec;
        rec.epoch = epoch;
        std::size_t steps = 0;
        Rng sample_rng(derive_seed(run.seed, 0x57e0 + epoch));
        Rng shuffle_rng(derive_seed(run.seed, 0x5481 + epoch));
        const std::vector<std::size_t> order = shuffle_rng.permutation(train_data.size());
        try {
            for (std::size_t begin = 0; begin < order.size(); begin += run.batch_size) {
                if (run.max_steps && total_steps >= run.max_steps) {
                    stop = true;
                    break;
                }
                const std::size_t end = std::min(begin + run.batch_size, order.size());
                std::vector<double> xb((end - begin) * train_data.dim);
                for (std::size_t i = begin; i < end; ++i) {
                    std::copy_n(train_data.row(order[i]), train_data.dim,
                                xb.data() + (i - begin) * train_data.dim);
                }
                Tape tape;
                const Tensor x = Tensor::from_vector({end - begin, train_data.dim}, std::move(xb));
                LossResult loss = step_loss(tape, st, run, x, sample_rng);
                const Tensor root = loss.aux_objective.defined()
                                        ? tape.add(loss.objective, loss.aux_objective)
                                        : loss.objective;
                tape.backward(root);
                if (clip_global_norm(all_params, run.clip_norm)) ++result.log.clip_events;
                st.adam.step();
                st.adam.zero_grad();
                result.log.clamp_events += tape.clamp_count();

                rec.mean.elbo += loss.report.elbo;
                rec.mean.recon += loss.report.recon;
                rec.mean.kl += loss.report.kl;
                rec.mean.fi_term_z += loss.report.fi_term_z;
                rec.mean.fi_term_x += loss.report.fi_term_x;
                rec.mean.mi_term += loss.report.mi_term;
                rec.mean.total += loss.report.total;
                ++steps;
                ++total_steps;
            }
        } catch (const NumericError& e) {
            result.log.status = 3;
            result.log.status_message = e.what();
            result.checkpoint = last_good;
            result.log.wall_seconds =
                std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
            if (!run.out_dir.empty()) {
                save_checkpoint(run.out_dir + "/checkpoint.bin", result.checkpoint);
                write_text_atomic(run.out_dir + "/runlog.jsonl", runlog_to_jsonl(result.log));
            }
            return result;
        }
        if (steps > 0) {
            const double inv = 1.0 / static_cast<double>(steps);
            rec.mean.elbo *= inv;
            rec.mean.recon *= inv;
            rec.mean.kl *= inv;
            rec.mean.fi_term_z *= inv;
            rec.mean.fi_term_x *= inv;
            rec.mean.mi_term *= inv;
            rec.mean.total *= inv;
        }

        const bool is_eval = (epoch % run.eval_every == 0) || epoch == run.epochs || stop;
        if (is_eval && eval_subset.size() > 0) {
            const FsTraceEntry entry =
                fs_trace_record(st.model, epoch, eval_subset, derive_seed(run.seed, 0xf5));
            rec.has_eval = true;
            rec.point = entry.point;
            rec.eval_elbo = entry.elbo;
            result.log.trace.push_back(entry);
            if (run.final_nll_k > 0 && (epoch == run.epochs || stop)) {
                rec.nll = iwae_nll(st.model, eval_subset, run.final_nll_k,
                                   derive_seed(run.seed, 0x0e11));
            }
            if (!run.out_dir.empty()) {
                save_checkpoint(run.out_dir + "/checkpoint.bin", make_checkpoint(st, run, epoch));
            }
        }
        result.log.epochs.push_back(std::move(rec));
        last_good = make_checkpoint(st, run, epoch);
    }

    result.checkpoint = std::move(last_good);
    result.log.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (!run.out_dir.empty()) {
        std::filesystem::create_directories(run.out_dir);
        save_checkpoint(run.out_dir + "/checkpoint.bin", result.checkpoint);
        write_text_atomic(run.out_dir + "/runlog.jsonl", runlog_to_jsonl(result.log));
    }
    return result;
}

}  // namespace

TrainResult train(const RunConfig& run, const Dataset& train_data, const Dataset& eval_data) {
    if (!run.out_dir.empty()) std::filesystem::create_directories(run.out_dir);
    TrainState st = build_state(run, train_data.dim);
    return train_loop(run, std::move(st), 0, train_data, eval_data);
}

TrainResult train_resume(const RunConfig& run, const Checkpoint& ckpt, const Dataset& train_data,
                         const Dataset& eval_data) {
    if (!run.out_dir.empty()) std::filesystem::create_directories(run.out_dir);
    TrainState st = restore_state(ckpt, run);
    return train_loop(run, std::move(st), ckpt.epoch, train_data, eval_data);
}

std::string format_double17(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::string runlog_to_jsonl(const RunLog& log) {
    std::string out;
    for (const EpochRecord& rec : log.epochs) {
        out += "{\"epoch\":" + std::to_string(rec.epoch);
        out += ",\"elbo\":" + format_double17(rec.mean.elbo);
        out += ",\"recon\":" + format_double17(rec.mean.recon);
        out += ",\"kl\":" + format_double17(rec.mean.kl);
        out += ",\"fi_term_z\":" + format_double17(rec.mean.fi_term_z);
        out += ",\"fi_term_x\":" + format_double17(rec.mean.fi_term_x);
        out += ",\"mi_term\":" + format_double17(rec.mean.mi_term);
        if (rec.has_eval) {
            out += ",\"entropy_power\":" + format_double17(rec.point.entropy_power);
            out += ",\"fisher_trace\":" + format_double17(rec.point.fisher_trace);
            out += ",\"product\":" + format_double17(rec.point.product);
            out += ",\"eval_elbo\":" + format_double17(rec.eval_elbo);
        }
        if (rec.nll) {
            out += ",\"nll\":" + format_double17(rec.nll->nll);
            out += ",\"nll_std_err\":" + format_double17(rec.nll->std_err);
        }
        out += "}\n";
    }
    return out;
}

std::vector<RunSummary> compare_runs(const std::vector<std::pair<std::string, RunLog>>& logs) {
    if (logs.size() < 2) throw ContractError("compare_runs needs at least two runs");
    std::vector<RunSummary> rows;
    for (const auto& [name, log] : logs) {
        const EpochRecord* final_eval = nullptr;
        for (const EpochRecord& rec : log.epochs) {
            if (rec.nll) final_eval = &rec;
        }
        if (!final_eval) {
            throw ContractError("compare_runs: run '" + name + "' has no NLL evaluation");
        }
        RunSummary row;
        row.name = name;
        row.nll = final_eval->nll->nll;
        row.nll_std_err = final_eval->nll->std_err;
        row.elbo = final_eval->eval_elbo;
        row.point = final_eval->point;
        rows.push_back(std::move(row));
    }
    std::stable_sort(rows.begin(), rows.end(),
                     [](const RunSummary& a, const RunSummary& b) { return a.nll < b.nll; });
    const RunSummary& best = rows.front();
    for (std::size_t i = 1; i < rows.size(); ++i) {
        const double gap = rows[i].nll - best.nll;
        const double se = std::sqrt(rows[i].nll_std_err * rows[i].nll_std_err +
                                    best.nll_std_err * best.nll_std_err);
        rows[i].significantly_worse_than_best = gap > 2.0 * se;
    }
    return rows;
}

}  // namespace fisherplane
