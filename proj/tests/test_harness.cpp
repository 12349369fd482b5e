#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "advrl/harness.hpp"

using namespace advrl;

namespace {

std::string strip_walltime(const std::string& csv) {
  std::istringstream is(csv);
  std::ostringstream os;
  std::string line;
  while (std::getline(is, line)) {
    std::size_t last = line.rfind(',');
    os << (last == std::string::npos ? line : line.substr(0, last)) << '\n';
  }
  return os.str();
}

std::string file_text(const std::string& path) {
  std::ifstream f(path);
  REQUIRE(f.good());
  std::ostringstream os;
  os << f.rdbuf();
  return os.str();
}

/// Untrained (random-init) victim saved to disk for fast harness runs.
std::string make_grid_policy_file(std::uint64_t seed) {
  TrainConfig cfg;
  cfg.episodes = 0;
  cfg.seed = seed;
  QPolicy p = train_dqn(GridChase(), cfg);
  std::string path = "harness_test_grid_policy.json";
  save_policy_file(path, p, "grid");
  return path;
}

std::string make_point_policy_file(std::uint64_t seed) {
  TrainConfig cfg;
  cfg.episodes = 0;
  cfg.seed = seed;
  ActorCritic p = train_ddpg(PointReach(), cfg);
  std::string path = "harness_test_point_policy.json";
  save_policy_file(path, p, "point");
  return path;
}

}  // namespace

TEST_CASE("config parsing: comments, whitespace, and errors") {
  KvConfig kv = parse_config_string(
      "# experiment\n"
      "env = grid\n"
      "  episodes=5   # trailing comment\n"
      "\n"
      "attack.epsilon = 0.01\n");
  REQUIRE(kv.at("env") == "grid");
  REQUIRE(kv.at("episodes") == "5");
  REQUIRE(kv.at("attack.epsilon") == "0.01");
  REQUIRE(kv.size() == 3);

  REQUIRE_THROWS(parse_config_string("no equals sign here\n"));
  REQUIRE_THROWS(parse_config_string("= value\n"));
}

TEST_CASE("typed config getters") {
  KvConfig kv{{"a", "1.5"}, {"b", "7"}, {"v", "1, 2,3"}, {"bad", "x7"}};
  REQUIRE(kv_get_double(kv, "a", 0.0) == 1.5);
  REQUIRE(kv_get_long(kv, "b", 0) == 7);
  REQUIRE(kv_get_long(kv, "missing", 42) == 42);
  REQUIRE(kv_get(kv, "missing", "dflt") == "dflt");
  REQUIRE(kv_get_vector(kv, "v") == Vector{1.0, 2.0, 3.0});
  REQUIRE_THROWS(kv_get_double(kv, "bad", 0.0));
  REQUIRE_THROWS(kv_require(kv, "missing"));
}

TEST_CASE("taxonomy registry covers all methods and round trips") {
  REQUIRE(attack_registry().size() == 14);
  const TaxonomyRecord& fgsm = find_taxonomy("obs-fgsm-wb");
  REQUIRE(fgsm.component == "observation");
  REQUIRE(fgsm.knowledge == "white");
  REQUIRE(fgsm.temporal == "independent");
  REQUIRE(find_taxonomy("env-search-bb").component == "dynamics");
  REQUIRE(find_taxonomy("obs-seq-sfd-bb").temporal == "sequential");
  REQUIRE(find_taxonomy("obs-fgsm-bb").knowledge == "black");
  REQUIRE_THROWS(find_taxonomy("obs-unknown"));

  std::string table = taxonomy_table();
  REQUIRE(table.find("method,component,knowledge") == 0);
  // One header + 14 rows.
  REQUIRE(std::count(table.begin(), table.end(), '\n') == 15);
  for (const auto& rec : attack_registry()) {
    REQUIRE(table.find(rec.method) != std::string::npos);
  }
}

TEST_CASE("experiment config from key-value pairs") {
  ExperimentConfig cfg = ExperimentConfig::from_kv(parse_config_string(
      "env = point\npolicy = p.json\nattack.method = obs-fd-bb\nepisodes = 7\nseed = 99\n"));
  REQUIRE(cfg.env_id == "point");
  REQUIRE(cfg.policy_path == "p.json");
  REQUIRE(cfg.method == "obs-fd-bb");
  REQUIRE(cfg.episodes == 7);
  REQUIRE(cfg.seed == 99);
  REQUIRE_NOTHROW(cfg.validate());

  cfg.method = "bogus";
  REQUIRE_THROWS(cfg.validate());
  cfg.method = "non-adv";
  cfg.env_id = "atari";
  REQUIRE_THROWS(cfg.validate());
}

TEST_CASE("non-adv experiment reproduces plain evaluation") {
  std::string path = make_grid_policy_file(21);
  ExperimentConfig cfg;
  cfg.env_id = "grid";
  cfg.policy_path = path;
  cfg.method = "non-adv";
  cfg.episodes = 5;
  cfg.seed = 31;

  std::vector<EpisodeMetrics> metrics = run_experiment(cfg);
  SavedPolicy saved = load_policy_file(path);
  auto ref = evaluate(saved.dqn, GridChase(), 5, Rng(31));
  REQUIRE(metrics.size() == 5);
  for (int i = 0; i < 5; ++i) {
    REQUIRE(metrics[i].episode_return == ref[i].episode_return);
    REQUIRE(metrics[i].length == ref[i].length);
    REQUIRE(metrics[i].queries == 0);
  }
  std::remove(path.c_str());
}

TEST_CASE("csv output has one row per episode plus headers") {
  std::string path = make_grid_policy_file(22);
  ExperimentConfig cfg;
  cfg.env_id = "grid";
  cfg.policy_path = path;
  cfg.method = "non-adv";
  cfg.episodes = 100;
  cfg.seed = 5;
  cfg.out_path = "harness_test_out.csv";
  run_experiment(cfg);

  std::string text = file_text(cfg.out_path);
  // schema_version + method + column header + 100 rows.
  REQUIRE(std::count(text.begin(), text.end(), '\n') == 103);
  REQUIRE(text.rfind("schema_version,1\nmethod,non-adv\nepisode,return,length,", 0) == 0);

  MetricsFile parsed = read_metrics_file(cfg.out_path);
  REQUIRE(parsed.method == "non-adv");
  REQUIRE(parsed.episodes.size() == 100);

  // Companion long-format file exists and is indexed by episode and step.
  std::string steps = file_text(steps_path_of(cfg.out_path));
  REQUIRE(steps.rfind("schema_version,1\nmethod,non-adv\nepisode,step,reward,cum_reward\n",
                      0) == 0);

  std::remove(path.c_str());
  std::remove(cfg.out_path.c_str());
  std::remove(steps_path_of(cfg.out_path).c_str());
}

TEST_CASE("identical config and seed give byte-identical csv minus walltime") {
  std::string path = make_grid_policy_file(23);
  ExperimentConfig cfg;
  cfg.env_id = "grid";
  cfg.policy_path = path;
  cfg.method = "obs-seq-rand-bb";
  cfg.episodes = 10;
  cfg.seed = 77;
  cfg.params["env.slip"] = "0.1";
  cfg.out_path = "harness_det_a.csv";
  run_experiment(cfg);
  std::string a = file_text(cfg.out_path);
  cfg.out_path = "harness_det_b.csv";
  run_experiment(cfg);
  std::string b = file_text(cfg.out_path);

  REQUIRE(strip_walltime(a) == strip_walltime(b));

  std::remove(path.c_str());
  std::remove("harness_det_a.csv");
  std::remove("harness_det_b.csv");
  std::remove(steps_path_of("harness_det_a.csv").c_str());
  std::remove(steps_path_of("harness_det_b.csv").c_str());
}

TEST_CASE("black-box firewall accounting through the harness") {
  std::string path = make_grid_policy_file(24);
  ExperimentConfig cfg;
  cfg.env_id = "grid";
  cfg.policy_path = path;
  cfg.episodes = 2;
  cfg.seed = 3;

  SECTION("black-box methods never read weights") {
    cfg.method = "obs-fd-bb";
    RunAudit audit;
    std::vector<EpisodeMetrics> metrics = run_experiment(cfg, &audit);
    REQUIRE(audit.weight_reads == 0);
    REQUIRE(audit.billed_queries > 0);
    REQUIRE(metrics[0].queries > 0);
  }

  SECTION("white-box methods bill no oracle queries") {
    cfg.method = "obs-fgsm-wb";
    RunAudit audit;
    std::vector<EpisodeMetrics> metrics = run_experiment(cfg, &audit);
    REQUIRE(audit.billed_queries == 0);
    REQUIRE(audit.weight_reads > 0);
    REQUIRE(metrics[0].queries == 0);
  }

  std::remove(path.c_str());
}

TEST_CASE("env and policy kinds must agree") {
  std::string grid = make_grid_policy_file(25);
  ExperimentConfig cfg;
  cfg.env_id = "point";
  cfg.policy_path = grid;
  cfg.method = "non-adv";
  cfg.episodes = 1;
  REQUIRE_THROWS_WITH(run_experiment(cfg), Catch::Matchers::ContainsSubstring("mismatch"));

  cfg.env_id = "grid";
  cfg.method = "obs-imi-bb";
  cfg.params["attack.imi.dataset"] = "50";
  cfg.params["attack.imi.epochs"] = "1";
  REQUIRE_NOTHROW(run_experiment(cfg));

  // Sequential methods are grid-only in this artifact.
  std::string point = make_point_policy_file(26);
  cfg.env_id = "point";
  cfg.policy_path = point;
  cfg.method = "obs-seq-fd-bb";
  REQUIRE_THROWS_WITH(run_experiment(cfg), Catch::Matchers::ContainsSubstring("not supported"));

  std::remove(grid.c_str());
  std::remove(point.c_str());
}

TEST_CASE("summary statistics and deltas against the baseline") {
  MetricsFile base;
  base.method = "non-adv";
  for (double r : {1.0, 1.0, 1.0}) {
    EpisodeMetrics m;
    m.episode_return = r;
    base.episodes.push_back(m);
  }
  MetricsFile attacked;
  attacked.method = "obs-fgsm-wb";
  int ep = 0;
  for (double r : {0.0, 0.5, 1.0}) {
    EpisodeMetrics m;
    m.episode = ep++;
    m.episode_return = r;
    m.queries = 10;
    attacked.episodes.push_back(m);
  }

  nlohmann::json j = nlohmann::json::parse(summarize({base, attacked}));
  REQUIRE(j["schema_version"] == 1);
  REQUIRE(j["methods"].size() == 2);

  // returns [1,1,1]: mean 1, se 0; non-adv vs itself: delta 0.
  auto& b = j["methods"][0];
  REQUIRE(b["method"] == "non-adv");
  REQUIRE(b["mean_return"].get<double>() == 1.0);
  REQUIRE(b["se_return"].get<double>() == 0.0);
  REQUIRE(b["delta_vs_non_adv"].get<double>() == 0.0);

  // attacked: mean 0.5, sample sd 0.5, se 0.5/sqrt(3); delta 0.5.
  auto& a = j["methods"][1];
  REQUIRE(a["mean_return"].get<double>() == Catch::Approx(0.5));
  REQUIRE(a["se_return"].get<double>() == Catch::Approx(0.5 / std::sqrt(3.0)));
  REQUIRE(a["delta_vs_non_adv"].get<double>() == Catch::Approx(0.5));
  REQUIRE(a["se_delta"].get<double>() == Catch::Approx(0.5 / std::sqrt(3.0)));
  REQUIRE(a["mean_queries"].get<double>() == Catch::Approx(10.0));

  // Three-file ordering fixture: worst attack sorts by inspection.
  MetricsFile worse;
  worse.method = "obs-fd-bb";
  for (double r : {0.0, 0.0, 0.0}) {
    EpisodeMetrics m;
    m.episode_return = r;
    worse.episodes.push_back(m);
  }
  nlohmann::json j3 = nlohmann::json::parse(summarize({base, attacked, worse}));
  REQUIRE(j3["methods"][2]["delta_vs_non_adv"].get<double>() == Catch::Approx(1.0));

  REQUIRE_THROWS(summarize({}));
}

TEST_CASE("metrics csv read rejects malformed files") {
  std::istringstream bad1("nonsense\n");
  REQUIRE_THROWS(read_metrics_csv(bad1, "bad1"));
  std::istringstream bad2("schema_version,1\nmethod,x\nepisode,return\n");
  REQUIRE_THROWS(read_metrics_csv(bad2, "bad2"));
  std::istringstream empty("schema_version,1\nmethod,x\nepisode,return,length,queries,walltime_ms\n");
  REQUIRE_THROWS(read_metrics_csv(empty, "empty"));
}

TEST_CASE("steps path derivation") {
  REQUIRE(steps_path_of("run.csv") == "run.steps.csv");
  REQUIRE(steps_path_of("run") == "run.steps.csv");
}
