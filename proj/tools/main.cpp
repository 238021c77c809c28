#include <CLI11.hpp>
#include <cstdio>

#include "platoonrl/ddpg.hpp"

// Temporary shell: train-only driver while the artifact pipeline is wired up.
int main(int argc, char** argv) {
    CLI::App app{"platoonrl: longitudinal-control research toolkit"};
    app.require_subcommand(1);

    auto* train_cmd = app.add_subcommand("train", "train the DDPG agent");
    int seed_lo = 20, seed_hi = 20, episodes = 300;
    std::string out = "ckpt.bin";
    double no_brake_prob = 0.0;
    int early_stop = 0;
    train_cmd->add_option("--seed-lo", seed_lo);
    train_cmd->add_option("--seed-hi", seed_hi);
    train_cmd->add_option("--episodes", episodes);
    train_cmd->add_option("--out", out);
    train_cmd->add_option("--no-brake-prob", no_brake_prob);
    train_cmd->add_option("--early-stop", early_stop);

    CLI11_PARSE(app, argc, argv);

    prl::TrainingConfig cfg;
    cfg.seed_lo = seed_lo;
    cfg.seed_hi = seed_hi;
    cfg.max_episodes = episodes;
    cfg.scenario.no_brake_prob = no_brake_prob;
    cfg.early_stop_perfect = early_stop;

    const prl::TrainResult res = prl::train(cfg, [](std::uint64_t seed, int ep,
                                                    const prl::EpisodeStats& st, double eval) {
        if (eval >= 0.0 || (ep + 1) % 10 == 0) {
            std::printf("seed %llu ep %4d return %12.1f steps %4d %s eval %.3f\n",
                        static_cast<unsigned long long>(seed), ep + 1, st.return_total, st.steps,
                        st.collided ? "X" : (st.truncated_on_stop ? "stop" : "cap"), eval);
            std::fflush(stdout);
        }
    });
    if (!res.best_checkpoint.empty()) {
        std::ofstream os(out, std::ios::binary);
        os.write(res.best_checkpoint.data(),
                 static_cast<std::streamsize>(res.best_checkpoint.size()));
        std::printf("best seed %llu eval %.3f -> %s\n",
                    static_cast<unsigned long long>(res.best_seed), res.best_eval_success,
                    out.c_str());
    } else {
        std::printf("no checkpoint reached evaluation\n");
    }
    return 0;
}
