#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "nevae/checkpoint.hpp"
#include "nevae/run_config.hpp"
#include "nevae/train.hpp"

using namespace nevae;
namespace fs = std::filesystem;

namespace {

Dataset toy_data(std::size_t n = 256, std::uint64_t seed = 1) {
    SyntheticSpec spec;
    spec.intrinsic_dim = 2;
    spec.ambient_dim = 16;
    spec.n_samples = n;
    spec.seed = seed;
    return make_synthetic(spec);
}

TrainConfig toy_config() {
    TrainConfig cfg;
    cfg.epochs = 3;
    cfg.batch_size = 64;
    cfg.lr = 1e-3;
    cfg.seed = 5;
    cfg.n_z = 4;
    cfg.hidden = {16};
    cfg.loss.anneal = AnnealSchedule{};
    cfg.curve_subset_cap = 128;
    return cfg;
}

std::vector<char> file_bytes(const fs::path& path) {
    std::ifstream is(path, std::ios::binary);
    return {std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>()};
}

}  // namespace

TEST(Train, ZeroEpochsReturnsInitAndEmptyLog) {
    TrainConfig cfg = toy_config();
    cfg.epochs = 0;
    const Dataset ds = toy_data();
    const TrainResult result = train(ds, cfg);
    EXPECT_TRUE(result.log.epochs.empty());

    Rng init_rng(mix_seed(cfg.seed, 1));
    Model fresh = make_model(ds.pixels, cfg.hidden, cfg.n_z, init_rng);
    auto a = result.model.params();
    auto b = fresh.params();
    ASSERT_EQ(a.size(), b.size());
    for (std::size_t i = 0; i < a.size(); ++i)
        for (std::size_t j = 0; j < a[i]->numel(); ++j)
            EXPECT_EQ(a[i]->data()[j], b[i]->data()[j]);
}

TEST(Train, SameSeedGivesBitwiseIdenticalCheckpoints) {
    const Dataset ds = toy_data();
    const fs::path dir_a = fs::temp_directory_path() / "nevae_train_a";
    const fs::path dir_b = fs::temp_directory_path() / "nevae_train_b";
    fs::remove_all(dir_a);
    fs::remove_all(dir_b);

    TrainConfig cfg = toy_config();
    cfg.checkpoint_dir = dir_a;
    train(ds, cfg);
    cfg.checkpoint_dir = dir_b;
    train(ds, cfg);

    const auto bytes_a = file_bytes(dir_a / "checkpoint_final.bin");
    const auto bytes_b = file_bytes(dir_b / "checkpoint_final.bin");
    ASSERT_FALSE(bytes_a.empty());
    EXPECT_EQ(bytes_a, bytes_b);
    fs::remove_all(dir_a);
    fs::remove_all(dir_b);
}

TEST(Train, LossDecreasesOverFirstEpochs) {
    TrainConfig cfg = toy_config();
    cfg.epochs = 5;
    const TrainResult result = train(toy_data(512, 2), cfg);
    ASSERT_EQ(result.log.epochs.size(), 5u);
    int violations = 0;
    for (std::size_t e = 1; e < result.log.epochs.size(); ++e) {
        if (result.log.epochs[e].mean_loss.total >
            result.log.epochs[e - 1].mean_loss.total)
            ++violations;
    }
    EXPECT_LE(violations, 1);
}

TEST(Train, AnnealWeightOnlyChangesWeighting) {
    // Same parameters, two weights: the decomposition terms agree bitwise and
    // the totals differ exactly by the weight delta on the KL term.
    Rng rng(31);
    Model model = make_model(16, {8}, 4, rng);
    Tensor x = Tensor::from_data({8, 16}, rng.uniform_vector(8 * 16, 0.0, 1.0));
    LossConfig loss;

    Rng n1(7), n2(7);
    const BatchLoss low = total_loss(x, model, loss, 0.1, n1);
    const BatchLoss high = total_loss(x, model, loss, 1.0, n2);
    EXPECT_EQ(low.report.recon_nll, high.report.recon_nll);
    EXPECT_EQ(low.report.kl, high.report.kl);
    EXPECT_EQ(low.report.ne_term, high.report.ne_term);
    EXPECT_NE(low.report.total, high.report.total);
    EXPECT_NEAR(high.report.total - low.report.total, 0.9 * low.report.kl, 1e-12);
}

TEST(Train, AnnealScheduleIsAppliedPerEpoch) {
    TrainConfig cfg = toy_config();
    cfg.epochs = 3;
    cfg.loss.anneal = AnnealSchedule{0.1, 1.0, 10};
    const TrainResult result = train(toy_data(), cfg);
    EXPECT_DOUBLE_EQ(result.log.epochs[0].mean_loss.kl_weight_applied, 0.1);
    EXPECT_DOUBLE_EQ(result.log.epochs[1].mean_loss.kl_weight_applied, 0.19);
    EXPECT_DOUBLE_EQ(result.log.epochs[2].mean_loss.kl_weight_applied, 0.28);
}

TEST(Train, CheckpointRoundTripReproducesDiagnosticsBitwise) {
    TrainConfig cfg = toy_config();
    const Dataset ds = toy_data();
    const TrainResult result = train(ds, cfg);

    const fs::path path = fs::temp_directory_path() / "nevae_train_rt.bin";
    save_checkpoint(path, result.model);
    const Model loaded = load_checkpoint(path);

    EvalConfig eval;
    eval.seed = 9;
    const DiagnosticsReport a = evaluate(result.model, ds, eval);
    const DiagnosticsReport b = evaluate(loaded, ds, eval);
    EXPECT_EQ(a.neg_elbo, b.neg_elbo);
    EXPECT_EQ(a.kl, b.kl);
    EXPECT_EQ(a.mi, b.mi);
    EXPECT_EQ(a.activity, b.activity);
    EXPECT_EQ(a.mean_reencode_se, b.mean_reencode_se);
    fs::remove(path);
}

TEST(Train, NonFiniteLossAbortsWithPosition) {
    TrainConfig cfg = toy_config();
    cfg.lr = 1e9;  // blows the parameters up within a couple of steps
    cfg.epochs = 4;
    try {
        train(toy_data(), cfg);
        FAIL() << "expected TrainingError";
    } catch (const TrainingError& e) {
        EXPECT_NE(std::string(e.what()).find("epoch"), std::string::npos) << e.what();
    }
}

TEST(Aggressive, InnerPhaseNeverTouchesDecoder) {
    Rng rng(41);
    Model model = make_model(16, {8}, 4, rng);
    std::vector<std::vector<double>> before;
    for (auto* p : model.decoder_tensors())
        before.emplace_back(p->data().begin(), p->data().end());

    Tensor x = Tensor::from_data({16, 16}, rng.uniform_vector(16 * 16, 0.0, 1.0));
    AdamState enc_opt;
    enc_opt.lr = 0.01;
    Rng noise(42);
    LossConfig loss;
    const std::size_t steps =
        aggressive_inner_steps(model, x, loss, 1.0, enc_opt, 50, 5, noise);
    EXPECT_GE(steps, 1u);
    EXPECT_LE(steps, 50u);

    auto after = model.decoder_tensors();
    for (std::size_t i = 0; i < after.size(); ++i) {
        const auto d = after[i]->data();
        for (std::size_t j = 0; j < d.size(); ++j) EXPECT_EQ(d[j], before[i][j]);
    }
}

TEST(Aggressive, MaxInnerOneTakesExactlyOneStep) {
    Rng rng(43);
    Model model = make_model(16, {8}, 4, rng);
    Tensor x = Tensor::from_data({8, 16}, rng.uniform_vector(8 * 16, 0.0, 1.0));
    AdamState enc_opt;
    Rng noise(44);
    LossConfig loss;
    EXPECT_EQ(aggressive_inner_steps(model, x, loss, 1.0, enc_opt, 1, 10, noise), 1u);
}

TEST(Aggressive, DegenerateInnerLoopStaysNearStandardRun) {
    // With a vanishing learning rate the extra encoder step cannot move the
    // parameters appreciably, so both runs end within a tight band of init.
    const Dataset ds = toy_data(128, 3);
    TrainConfig std_cfg = toy_config();
    std_cfg.epochs = 2;
    std_cfg.lr = 1e-6;
    TrainConfig agg_cfg = std_cfg;
    agg_cfg.aggressive = true;
    agg_cfg.aggressive_max_inner = 1;

    const TrainResult std_run = train(ds, std_cfg);
    const TrainResult agg_run = train(ds, agg_cfg);

    auto a = const_cast<TrainResult&>(std_run).model.params();
    auto b = const_cast<TrainResult&>(agg_run).model.params();
    double max_diff = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
        for (std::size_t j = 0; j < a[i]->numel(); ++j)
            max_diff = std::max(max_diff, std::abs(a[i]->data()[j] - b[i]->data()[j]));
    EXPECT_LT(max_diff, 1e-3);

    const double std_total = std_run.log.epochs.back().mean_loss.total;
    const double agg_total = agg_run.log.epochs.back().mean_loss.total;
    EXPECT_NEAR(agg_total, std_total, 0.05 * std_total);
}

TEST(Aggressive, FullRunCompletes) {
    TrainConfig cfg = toy_config();
    cfg.aggressive = true;
    cfg.aggressive_max_inner = 10;
    cfg.aggressive_stop_window = 3;
    cfg.epochs = 3;
    const TrainResult result = train(toy_data(128, 4), cfg);
    ASSERT_EQ(result.log.epochs.size(), 3u);
    for (const auto& e : result.log.epochs) EXPECT_TRUE(std::isfinite(e.mean_loss.total));
}

TEST(RunLogFiles, CsvAndJsonWritten) {
    TrainConfig cfg = toy_config();
    cfg.eval_every = 2;
    const TrainResult result = train(toy_data(), cfg);
    const fs::path dir = fs::temp_directory_path() / "nevae_runlog";
    fs::remove_all(dir);
    write_run_log(dir, "toy", result.log);
    EXPECT_TRUE(fs::exists(dir / "losses.csv"));
    EXPECT_TRUE(fs::exists(dir / "runlog.json"));
    EXPECT_TRUE(fs::exists(dir / "metrics.csv"));
    EXPECT_TRUE(fs::exists(dir / "activity.csv"));

    std::ifstream is(dir / "losses.csv");
    std::string header;
    std::getline(is, header);
    EXPECT_EQ(header, "epoch,recon_nll,kl,ne_term,kl_weight,total,reencode_se");
    std::size_t rows = 0;
    std::string line;
    while (std::getline(is, line)) ++rows;
    EXPECT_EQ(rows, cfg.epochs);
    fs::remove_all(dir);
}

TEST(RunConfigFile, ParseApplyAndRoundTrip) {
    const fs::path path = fs::temp_directory_path() / "nevae_cfg.txt";
    {
        std::ofstream os(path);
        os << "# comment line\n";
        os << "epochs = 7\n";
        os << "variant = ne_lp\n";
        os << "cap_c = -1.5\n";
        os << "hidden = 32,16\n";
        os << "anneal = 0.2:0.9:4\n";
    }
    TrainConfig cfg;
    apply_train_config(parse_key_value_file(path), cfg);
    EXPECT_EQ(cfg.epochs, 7u);
    EXPECT_EQ(cfg.loss.variant, LossVariant::NeLp);
    EXPECT_DOUBLE_EQ(cfg.loss.cap_c, -1.5);
    EXPECT_EQ(cfg.hidden, (std::vector<std::size_t>{32, 16}));
    ASSERT_TRUE(cfg.loss.anneal.has_value());
    EXPECT_DOUBLE_EQ(cfg.loss.anneal->start_weight, 0.2);
    EXPECT_EQ(cfg.loss.anneal->epochs, 4u);

    const auto kv = train_config_to_kv(cfg);
    TrainConfig back;
    apply_train_config(kv, back);
    EXPECT_EQ(back.epochs, cfg.epochs);
    EXPECT_EQ(back.loss.variant, cfg.loss.variant);
    EXPECT_EQ(back.hidden, cfg.hidden);

    EXPECT_THROW(apply_train_config({{"nonsense", "1"}}, cfg), ConfigError);
    {
        std::ofstream os(path);
        os << "keyonly\n";
    }
    EXPECT_THROW(parse_key_value_file(path), ConfigError);
    fs::remove(path);
}
