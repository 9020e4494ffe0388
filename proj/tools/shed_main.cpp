// Command-line front end: experiment runs, evaluation-set generation,
// policy evaluation, world-model fidelity checks, aggregation, CSV export.

#include <filesystem>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "json.hpp"
#include "shed/aggregate.hpp"
#include "shed/checkpoint.hpp"
#include "shed/errors.hpp"
#include "shed/runner.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace shed;

namespace {

json eval_set_to_json(const EvalSet& set) {
    json rows = json::array();
    for (const auto& p : set.params) rows.push_back(p.values);
    return json{{"family", family_name(set.family)},
                {"mode", set.mode == EvalSetMode::grid ? "grid" : "random"},
                {"seed", set.seed},
                {"m", set.size()},
                {"params", rows},
                {"env_seeds", set.seeds}};
}

EvalSet eval_set_from_json(const json& j) {
    EvalSet set;
    set.family = family_from_name(j.at("family").get<std::string>());
    set.mode = j.at("mode").get<std::string>() == "grid" ? EvalSetMode::grid : EvalSetMode::random;
    set.seed = j.at("seed").get<uint64_t>();
    for (const auto& row : j.at("params")) set.params.push_back(ParamVector{row.get<Vec>()});
    set.seeds = j.at("env_seeds").get<std::vector<uint64_t>>();
    return set;
}

void write_json(const std::string& path, const json& j) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write '" + path + "'");
    out << j.dump(2) << "\n";
}

void write_curve_csv(const fs::path& path, const std::vector<CurvePoint>& curve, int env_budget) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write '" + path.string() + "'");
    out << "budget_step,episode,t,mean,stderr\n";
    char buf[160];
    for (const auto& p : curve) {
        const long global = static_cast<long>(p.episode - 1) * env_budget + p.step;
        std::snprintf(buf, sizeof(buf), "%ld,%d,%d,%.17g,%.17g\n", global, p.episode, p.step,
                      p.mean, p.stderr_);
        out << buf;
    }
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"hierarchical teacher-student curriculum lab"};
    app.require_subcommand(1);

    // ------------------------------------------------------ gen-eval-set
    auto* gen = app.add_subcommand("gen-eval-set", "build and persist a fixed evaluation set");
    std::string gen_family = "maze", gen_mode = "grid", gen_out = "eval_set.json";
    int gen_m = 10;
    uint64_t gen_seed = 7;
    std::vector<double> gen_deltas;
    gen->add_option("--family", gen_family, "lander | maze");
    gen->add_option("--m", gen_m, "number of environments");
    gen->add_option("--mode", gen_mode, "grid | random");
    gen->add_option("--seed", gen_seed, "construction seed");
    gen->add_option("--deltas", gen_deltas, "per-dim interval spacing (continuous dims)");
    gen->add_option("--out", gen_out, "output file");

    // -------------------------------------------------------------- train
    auto* train = app.add_subcommand("train", "run the episodic teacher-student protocol");
    std::string train_config, train_teacher, train_family, train_out = "runlog.jsonl";
    std::string ckpt_dir;
    int train_episodes = -1, train_budget = -1, train_steps = -1;
    int64_t train_seed = -1;
    train->add_option("--config", train_config, "JSON config file (defaults when omitted)");
    train->add_option("--teacher", train_teacher, "shed | h-mdp | dr | accel | accel-edit");
    train->add_option("--family", train_family, "lander | maze");
    train->add_option("--seed", train_seed, "master seed");
    train->add_option("--episodes", train_episodes, "teacher episodes E");
    train->add_option("--budget", train_budget, "environments per episode T");
    train->add_option("--steps-per-env", train_steps, "student env steps per environment C");
    train->add_option("--out", train_out, "run log path (JSONL)");
    train->add_option("--checkpoint-dir", ckpt_dir, "write final checkpoints here");

    // ----------------------------------------------------------- evaluate
    auto* eval = app.add_subcommand("evaluate", "evaluate a student checkpoint on a param set");
    std::string eval_ckpt, eval_set_path, eval_out;
    int eval_episodes = 3;
    uint64_t eval_seed_flag = 0;
    eval->add_option("--checkpoint", eval_ckpt, "student checkpoint")->required();
    eval->add_option("--set", eval_set_path, "param set file (gen-eval-set output)")->required();
    eval->add_option("--episodes", eval_episodes, "episodes per environment");
    eval->add_option("--seed", eval_seed_flag, "evaluation seed override (0 = set's own seed)");
    eval->add_option("--out", eval_out, "write the report here instead of stdout");

    // --------------------------------------------------- worldmodel-check
    auto* wm = app.add_subcommand("worldmodel-check", "fidelity check against a scripted oracle");
    uint64_t wm_seed = 1;
    int wm_updates = 4000, wm_samples = 4096;
    std::string wm_out;
    wm->add_option("--seed", wm_seed, "seed");
    wm->add_option("--updates", wm_updates, "training updates per noise regime");
    wm->add_option("--samples", wm_samples, "oracle transitions per regime");
    wm->add_option("--out", wm_out, "write the report here instead of stdout");

    // ------------------------------------------------------------ aggregate
    auto* agg = app.add_subcommand("aggregate", "aggregate run logs into IQM/optimality-gap report");
    std::vector<std::string> agg_logs;
    std::string agg_out = "report.json";
    std::vector<double> agg_bounds;
    agg->add_option("logs", agg_logs, "run log files")->required();
    agg->add_option("--norm-bounds", agg_bounds, "worst best (default: first log's config)");
    agg->add_option("--out", agg_out, "output report");

    // --------------------------------------------------------- export-plots
    auto* plots = app.add_subcommand("export-plots", "write per-curve CSV series");
    std::vector<std::string> plot_logs;
    std::string plot_dir = "plots";
    std::vector<double> plot_bounds;
    plots->add_option("logs", plot_logs, "run log files")->required();
    plots->add_option("--norm-bounds", plot_bounds, "worst best (default: first log's config)");
    plots->add_option("--out-dir", plot_dir, "output directory");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*gen) {
            const Family family = family_from_name(gen_family);
            const ParamSpace space = param_space_for(family);
            Vec deltas = gen_deltas;
            if (deltas.empty() && family == Family::lander)
                deltas = RunConfig::defaults(family).eval_set.deltas;
            const EvalSetMode mode =
                gen_mode == "grid" ? EvalSetMode::grid : EvalSetMode::random;
            const EvalSet set = build_eval_set(space, family, gen_m, mode, gen_seed, deltas);
            write_json(gen_out, eval_set_to_json(set));
            std::cout << "wrote " << gen_out << " (" << set.size() << " environments)\n";
        } else if (*train) {
            RunConfig cfg = train_config.empty()
                                ? RunConfig::defaults(train_family.empty()
                                                          ? Family::maze
                                                          : family_from_name(train_family))
                                : RunConfig::load_file(train_config);
            if (!train_family.empty()) {
                // Re-derive family defaults when the flag overrides the file.
                const Family fam = family_from_name(train_family);
                if (fam != cfg.family) {
                    RunConfig fresh = RunConfig::defaults(fam);
                    fresh.teacher = cfg.teacher;
                    fresh.master_seed = cfg.master_seed;
                    cfg = fresh;
                }
            }
            if (!train_teacher.empty()) cfg.teacher = teacher_kind_from_name(train_teacher);
            if (train_seed >= 0) cfg.master_seed = static_cast<uint64_t>(train_seed);
            if (train_episodes > 0) cfg.episodes = train_episodes;
            if (train_budget > 0) cfg.env_budget = train_budget;
            if (train_steps > 0) cfg.steps_per_env = train_steps;
            cfg.validate();

            RunArtifacts art = run_experiment(cfg);
            art.log.save(train_out);
            std::cout << "run complete: final test mean " << art.final_test_mean << "; log at "
                      << train_out << "\n";
            if (!ckpt_dir.empty()) {
                fs::create_directories(ckpt_dir);
                if (art.student)
                    save_student((fs::path(ckpt_dir) / "student.ckpt").string(), *art.student,
                                 cfg.family);
                if (art.teacher)
                    save_teacher((fs::path(ckpt_dir) / "teacher.ckpt").string(), *art.teacher,
                                 cfg.family);
                if (art.worldmodel)
                    save_worldmodel((fs::path(ckpt_dir) / "worldmodel.ckpt").string(),
                                    *art.worldmodel, cfg.family);
                std::cout << "checkpoints in " << ckpt_dir << "\n";
            }
        } else if (*eval) {
            Family family = Family::maze;
            const StudentPolicy policy = load_student(eval_ckpt, &family);
            std::ifstream in(eval_set_path);
            if (!in) throw Error("cannot open '" + eval_set_path + "'");
            json jset;
            in >> jset;
            EvalSet set = eval_set_from_json(jset);
            if (eval_seed_flag != 0) {
                set.seed = eval_seed_flag;
                for (size_t i = 0; i < set.seeds.size(); ++i)
                    set.seeds[i] = derive_seed(eval_seed_flag, "eval-env", i);
            }
            Vec per_env;
            const double mean = evaluate_on_set(policy, set, eval_episodes, &per_env);
            const json out{{"mean", mean}, {"returns", per_env}, {"episodes", eval_episodes}};
            if (eval_out.empty())
                std::cout << out.dump(2) << "\n";
            else
                write_json(eval_out, out);
        } else if (*wm) {
            WorldModelCheckConfig cfg;
            cfg.seed = wm_seed;
            cfg.train_updates = wm_updates;
            cfg.train_samples = wm_samples;
            const FidelityReport report = run_worldmodel_check(cfg);
            const json out = report.to_json();
            if (wm_out.empty())
                std::cout << out.dump(2) << "\n";
            else
                write_json(wm_out, out);
            if (!report.all_pass) return 2;
        } else if (*agg || *plots) {
            const auto& files = *agg ? agg_logs : plot_logs;
            const auto& bounds_flag = *agg ? agg_bounds : plot_bounds;
            std::vector<RunLog> logs;
            for (const auto& f : files) logs.push_back(RunLog::load(f));
            double lo, hi;
            if (bounds_flag.size() == 2) {
                lo = bounds_flag[0];
                hi = bounds_flag[1];
            } else {
                const auto& rc = *logs.front().first("run_start");
                const auto nb = rc.at("config").at("report").at("norm_bounds").get<Vec>();
                lo = nb[0];
                hi = nb[1];
            }
            const AggregateReport report = aggregate(logs, lo, hi);
            if (*agg) {
                write_json(agg_out, report.to_json());
                std::cout << "wrote " << agg_out << "\n";
            } else {
                fs::create_directories(plot_dir);
                const auto& rc = *logs.front().first("run_start");
                const int env_budget = rc.at("config").at("env_budget").get<int>();
                for (const auto& m : report.methods) {
                    write_curve_csv(fs::path(plot_dir) / (m.method + "_test_mean.csv"), m.curve,
                                    env_budget);
                    for (size_t i = 0; i < m.env_curves.size(); ++i)
                        write_curve_csv(fs::path(plot_dir) /
                                            (m.method + "_test_env" + std::to_string(i) + ".csv"),
                                        m.env_curves[i], env_budget);
                }
                std::cout << "wrote curves to " << plot_dir << "\n";
            }
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
