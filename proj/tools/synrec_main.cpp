#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "synrec/data/dataset.hpp"
#include "synrec/data/synth.hpp"
#include "synrec/model/backbone.hpp"
#include "synrec/model/trie.hpp"
#include "synrec/pid/pid.hpp"
#include "synrec/tokenizer/rqvae.hpp"
#include "synrec/train/evaluate.hpp"
#include "synrec/train/split.hpp"
#include "synrec/train/trainer.hpp"

namespace {

using namespace synrec;

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << content;
}

std::string meta_lookup(
    const std::vector<std::pair<std::string, std::string>>& meta,
    const std::string& key) {
  for (const auto& [k, v] : meta)
    if (k == key) return v;
  throw std::runtime_error("checkpoint metadata is missing '" + key + "'");
}

// Shared by eval, pid, and attn-share: a checkpoint plus the corpus and
// identifier map it was trained against, cross-checked by fingerprint.
struct LoadedRun {
  Backbone model;
  IdentifierSet ids;
  Dataset data;
};

LoadedRun load_run(const std::string& checkpoint, const std::string& data_dir,
                   const std::string& identifiers) {
  std::vector<std::pair<std::string, std::string>> meta;
  Backbone model = load_checkpoint(checkpoint, &meta);
  const std::size_t depth = std::stoull(meta_lookup(meta, "vocab_depth"));
  const std::size_t k = std::stoull(meta_lookup(meta, "vocab_codebook"));
  const std::uint64_t fp = std::stoull(meta_lookup(meta, "vocab_fingerprint"));
  std::vector<std::string> names;
  IdentifierSet ids =
      read_identifier_map(identifiers, Vocabulary(depth, k), &names);
  if (ids.vocab.fingerprint() != fp)
    throw std::runtime_error(
        "identifier map does not match the checkpoint vocabulary");
  Dataset data = load_dataset(data_dir);
  if (names != data.item_ids)
    throw std::runtime_error(
        "identifier map and dataset list different items");
  return {std::move(model), std::move(ids), std::move(data)};
}

int run_synth(const std::string& out_dir, const SynthConfig& cfg) {
  const SynthResult r = generate_synthetic(cfg);
  save_dataset(out_dir, r.data);
  const DatasetMeta m = r.data.meta();
  std::cout << "items " << m.item_count << " users " << m.user_count
            << " interactions " << m.interaction_count << " avg_len "
            << m.avg_len << " sparsity " << m.sparsity << "\n";
  return 0;
}

struct TokenizeArgs {
  std::string data_dir, out, codebooks_out;
  std::size_t depth = 2, codebook = 16, latent = 16, hidden = 32;
  std::size_t epochs = 20, batch = 64, kmeans_iters = 10;
  double lr = 1e-3, beta = 0.25, ema = 0.99;
  std::uint64_t seed = 1;
};

int run_tokenize(const TokenizeArgs& a) {
  const Dataset data = load_dataset(a.data_dir);
  std::vector<std::vector<std::int32_t>> text_codes, vision_codes;
  for (Modality m : {Modality::text, Modality::vision}) {
    const ModalityTable& table =
        m == Modality::text ? data.text : data.vision;
    RqVaeConfig cfg;
    cfg.modality = m;
    cfg.input_dim = table.dim;
    cfg.latent_dim = a.latent;
    cfg.hidden_dim = a.hidden;
    cfg.depth = a.depth;
    cfg.codebook_size = a.codebook;
    cfg.beta = a.beta;
    cfg.ema_decay = a.ema;
    cfg.kmeans_iters = a.kmeans_iters;
    cfg.epochs = a.epochs;
    cfg.batch_size = a.batch;
    cfg.lr = a.lr;
    cfg.seed = a.seed;
    RqVae vae(cfg);
    const RqVaeTrainStats stats = vae.train(table.rows, table.count());
    std::cout << modality_name(m) << " recon " << stats.epoch_recon.front()
              << " -> " << stats.epoch_recon.back() << " reseeded "
              << stats.reseeded << "\n";
    auto& codes = m == Modality::text ? text_codes : vision_codes;
    for (std::size_t i = 0; i < table.count(); ++i)
      codes.push_back(vae.tokenize_one(table.row(i)).codes);
    if (!a.codebooks_out.empty())
      write_codebook(a.codebooks_out + "." + modality_name(m) + ".sgc",
                     vae.codebooks());
  }
  const IdentifierSet ids =
      build_identifiers(Vocabulary(a.depth, a.codebook), text_codes,
                        vision_codes);
  write_identifier_map(a.out, ids, data.item_ids);
  std::cout << "identifiers " << ids.identifiers.size() << " collisions "
            << ids.collision_groups << " suffix " << ids.vocab.suffix_count()
            << "\n";
  return 0;
}

struct TrainArgs {
  std::string data_dir, identifiers, out, log_path;
  std::size_t depth = 2, codebook = 16;
  std::size_t layers = 2, heads = 4, d_model = 32, d_ff = 64;
  std::size_t max_len = 64, max_target_len = 8;
  TrainConfig train;
  std::string variant = "full";
  std::uint64_t model_seed = 1;
};

int run_train(const TrainArgs& a) {
  const Dataset data = load_dataset(a.data_dir);
  std::vector<std::string> names;
  IdentifierSet ids = read_identifier_map(
      a.identifiers, Vocabulary(a.depth, a.codebook), &names);
  if (names != data.item_ids)
    throw std::runtime_error(
        "identifier map and dataset list different items");

  TrainConfig cfg = a.train;
  cfg.variant = variant_from_string(a.variant);
  const SplitResult split = split_leave_one_out(data.interactions);
  if (split.dropped)
    std::cout << "dropped " << split.dropped << " short sequences\n";

  BackboneConfig mc;
  mc.layers = a.layers;
  mc.heads = a.heads;
  mc.d_model = a.d_model;
  mc.d_ff = a.d_ff;
  mc.max_len = a.max_len;
  mc.max_target_len = a.max_target_len;
  mc.vocab_size = ids.vocab.total_size();
  mc.seed = a.model_seed;
  Backbone model(mc);

  const TrainStats stats = train_model(model, ids, split, cfg);
  std::cout << "steps " << stats.steps << " final_loss "
            << (stats.epoch_loss.empty() ? 0.0 : stats.epoch_loss.back())
            << " masked_text " << stats.masked_text << " masked_vision "
            << stats.masked_vision << "\n";
  if (!a.log_path.empty()) write_file(a.log_path, train_log_csv(stats));

  save_checkpoint(
      model, a.out,
      {{"vocab_depth", std::to_string(ids.vocab.depth())},
       {"vocab_codebook", std::to_string(ids.vocab.codebook_size())},
       {"vocab_suffix", std::to_string(ids.vocab.suffix_count())},
       {"vocab_fingerprint", std::to_string(ids.vocab.fingerprint())},
       {"variant", variant_name(cfg.variant)},
       {"train_seed", std::to_string(cfg.seed)}});
  return 0;
}

int run_eval(const std::string& checkpoint, const std::string& data_dir,
             const std::string& identifiers, const std::string& split_name,
             std::size_t beam, const std::string& out,
             const std::string& name) {
  LoadedRun run = load_run(checkpoint, data_dir, identifiers);
  const SplitResult split = split_leave_one_out(run.data.interactions);
  const auto& pairs = split_name == "valid" ? split.valid : split.test;
  const PrefixTrie trie(run.ids.identifiers);
  const EvalReport report = evaluate(run.model, trie, run.ids, pairs, beam);
  std::cout << eval_report_table(report);
  if (!out.empty()) write_file(out, eval_report_csv(report, name));
  return 0;
}

int run_pid(const std::string& checkpoint, const std::string& data_dir,
            const std::string& identifiers, const std::string& metric,
            std::size_t beam, const std::string& out,
            const std::string& run_id) {
  LoadedRun run = load_run(checkpoint, data_dir, identifiers);
  const SplitResult split = split_leave_one_out(run.data.interactions);
  const PrefixTrie trie(run.ids.identifiers);
  const AuditMetric am = audit_metric_from_string(metric);
  const PidReport report =
      audit_model(run.model, trie, run.ids, split.test, beam, am);
  const std::string csv = pid_report_csv(report, run_id, am);
  std::cout << csv;
  if (!out.empty()) write_file(out, csv);
  return 0;
}

int run_attn_share(const std::string& checkpoint, const std::string& data_dir,
                   const std::string& identifiers, std::size_t limit,
                   const std::string& out) {
  LoadedRun run = load_run(checkpoint, data_dir, identifiers);
  std::vector<std::vector<std::int32_t>> histories = run.data.interactions;
  if (limit && histories.size() > limit) histories.resize(limit);
  const auto [share_t, share_v] =
      attention_share(run.model, run.ids, histories);
  const std::string csv = attention_share_csv(share_t, share_v);
  std::cout << csv;
  if (!out.empty()) write_file(out, csv);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Synergy-aware generative recommender pipeline"};
  app.require_subcommand(1);

  // synth
  auto* synth = app.add_subcommand("synth", "generate a synthetic corpus");
  synth->set_config("--config");
  std::string synth_out;
  SynthConfig synth_cfg;
  synth->add_option("--out", synth_out, "output dataset directory")->required();
  synth->add_option("--items", synth_cfg.items, "item count");
  synth->add_option("--dim", synth_cfg.dim, "embedding width per modality");
  synth->add_option("--users", synth_cfg.users, "user count");
  synth->add_option("--min-len", synth_cfg.min_len, "shortest sequence");
  synth->add_option("--max-len", synth_cfg.max_len, "longest sequence");
  synth->add_option("--bits", synth_cfg.bits, "hidden bits per modality");
  synth->add_option("--window", synth_cfg.window, "parity window");
  synth->add_option("--sigma", synth_cfg.sigma, "embedding noise level");
  synth->add_option("--popularity", synth_cfg.popularity,
                    "within-category popularity decay, 0 = uniform");
  synth->add_option("--leakage", synth_cfg.leakage,
                    "chance a transition copies the previous text bits, "
                    "0 = purely joint rule");
  synth->add_option("--seed", synth_cfg.seed, "random seed");

  // tokenize
  auto* tok = app.add_subcommand("tokenize", "learn identifiers for a corpus");
  tok->set_config("--config");
  TokenizeArgs tok_args;
  tok->add_option("--data", tok_args.data_dir, "dataset directory")->required();
  tok->add_option("--out", tok_args.out, "identifier map path")->required();
  tok->add_option("--codebooks-out", tok_args.codebooks_out,
                  "path prefix for the learned codebooks");
  tok->add_option("--depth", tok_args.depth, "quantization levels");
  tok->add_option("--codebook-size", tok_args.codebook, "codewords per level");
  tok->add_option("--latent", tok_args.latent, "latent width");
  tok->add_option("--hidden", tok_args.hidden, "mlp width");
  tok->add_option("--epochs", tok_args.epochs, "training epochs");
  tok->add_option("--batch", tok_args.batch, "batch size");
  tok->add_option("--kmeans-iters", tok_args.kmeans_iters,
                  "codebook init iterations");
  tok->add_option("--lr", tok_args.lr, "learning rate");
  tok->add_option("--beta", tok_args.beta, "commitment weight");
  tok->add_option("--ema", tok_args.ema, "codebook ema decay");
  tok->add_option("--seed", tok_args.seed, "random seed");

  // train
  auto* train = app.add_subcommand("train", "train the recommender");
  train->set_config("--config");
  TrainArgs train_args;
  train->add_option("--data", train_args.data_dir, "dataset directory")
      ->required();
  train->add_option("--identifiers", train_args.identifiers,
                    "identifier map path")
      ->required();
  train->add_option("--out", train_args.out, "checkpoint path")->required();
  train->add_option("--log", train_args.log_path, "training curve csv path");
  train->add_option("--depth", train_args.depth, "identifier depth");
  train->add_option("--codebook-size", train_args.codebook,
                    "codewords per level");
  train->add_option("--layers", train_args.layers, "encoder/decoder layers");
  train->add_option("--heads", train_args.heads, "attention heads");
  train->add_option("--d-model", train_args.d_model, "model width");
  train->add_option("--ff", train_args.d_ff, "feed-forward width");
  train->add_option("--max-len", train_args.max_len, "history token cap");
  train->add_option("--max-target-len", train_args.max_target_len,
                    "identifier token cap");
  train->add_option("--model-seed", train_args.model_seed,
                    "parameter init seed");
  train->add_option("--variant", train_args.variant,
                    "full, wo_SM, wo_UN, or wo_SCL");
  train->add_option("--lr", train_args.train.lr, "learning rate");
  train->add_option("--weight-decay", train_args.train.weight_decay,
                    "decoupled weight decay");
  train->add_option("--warmup", train_args.train.warmup_ratio,
                    "warmup fraction of total steps");
  train->add_option("--epochs", train_args.train.epochs, "training epochs");
  train->add_option("--batch", train_args.train.batch_size, "batch size");
  train->add_option("--mask-ratio", train_args.train.mask_ratio,
                    "saliency mask ratio");
  train->add_option("--lambda", train_args.train.lambda,
                    "contrastive loss weight");
  train->add_option("--tau", train_args.train.tau, "contrastive temperature");
  train->add_option("--seed", train_args.train.seed, "training seed");
  train->add_option("--patience", train_args.train.patience,
                    "early-stop patience in epochs, 0 disables");
  train->add_option("--eval-beam", train_args.train.eval_beam,
                    "validation beam width");
  train->add_option("--log-every", train_args.train.log_every,
                    "steps between log rows");

  // eval
  auto* eval = app.add_subcommand("eval", "score a checkpoint");
  eval->set_config("--config");
  std::string eval_ckpt, eval_data, eval_ids, eval_out, eval_name = "model";
  std::string eval_split = "test";
  std::size_t eval_beam = 20;
  eval->add_option("--checkpoint", eval_ckpt, "checkpoint path")->required();
  eval->add_option("--data", eval_data, "dataset directory")->required();
  eval->add_option("--identifiers", eval_ids, "identifier map path")
      ->required();
  eval->add_option("--beam", eval_beam, "beam width");
  eval->add_option("--split", eval_split, "test or valid")
      ->check(CLI::IsMember({"test", "valid"}));
  eval->add_option("--out", eval_out, "metric csv path");
  eval->add_option("--name", eval_name, "run name in the csv");

  // pid
  auto* pid = app.add_subcommand("pid", "synergy audit of a checkpoint");
  pid->set_config("--config");
  std::string pid_ckpt, pid_data, pid_ids, pid_out, pid_run = "run";
  std::string pid_metric = "ndcg@10";
  std::size_t pid_beam = 20;
  pid->add_option("--checkpoint", pid_ckpt, "checkpoint path")->required();
  pid->add_option("--data", pid_data, "dataset directory")->required();
  pid->add_option("--identifiers", pid_ids, "identifier map path")->required();
  pid->add_option("--metric", pid_metric, "audit metric, e.g. ndcg@10");
  pid->add_option("--beam", pid_beam, "beam width");
  pid->add_option("--out", pid_out, "pid csv path");
  pid->add_option("--run-id", pid_run, "run id in the csv");

  // attn-share
  auto* attn = app.add_subcommand("attn-share",
                                  "modality attention share of a checkpoint");
  attn->set_config("--config");
  std::string attn_ckpt, attn_data, attn_ids, attn_out;
  std::size_t attn_limit = 0;
  attn->add_option("--checkpoint", attn_ckpt, "checkpoint path")->required();
  attn->add_option("--data", attn_data, "dataset directory")->required();
  attn->add_option("--identifiers", attn_ids, "identifier map path")
      ->required();
  attn->add_option("--limit", attn_limit, "max sequences, 0 = all");
  attn->add_option("--out", attn_out, "share csv path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    std::cout << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << "\n" << app.help() << "\n";
    return 2;
  }

  try {
    if (app.got_subcommand(synth)) return run_synth(synth_out, synth_cfg);
    if (app.got_subcommand(tok)) return run_tokenize(tok_args);
    if (app.got_subcommand(train)) return run_train(train_args);
    if (app.got_subcommand(eval))
      return run_eval(eval_ckpt, eval_data, eval_ids, eval_split, eval_beam,
                      eval_out, eval_name);
    if (app.got_subcommand(pid))
      return run_pid(pid_ckpt, pid_data, pid_ids, pid_metric, pid_beam,
                     pid_out, pid_run);
    if (app.got_subcommand(attn))
      return run_attn_share(attn_ckpt, attn_data, attn_ids, attn_limit,
                            attn_out);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  std::cerr << "error: no subcommand\n";
  return 2;
}
