#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "eigengap/simlab.hpp"

using namespace eigengap;
using namespace eigengap::simlab;

namespace {

ExperimentConfig small_config() {
  ExperimentConfig c;
  c.n = 120;
  c.K_grid = {2, 3, 4};
  c.K0_grid = {2, 3};
  c.replicates = 12;
  c.calibration_replicates = 100;
  c.seed = 5;
  c.workers = 1;
  return c;
}

egtest::Calibrator& shared_calibrator() {
  static egtest::Calibrator calibrator(std::filesystem::temp_directory_path() / "eigengap_test_simlab_cache", 1);
  return calibrator;
}

std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

}  // namespace

TEST(Names, ParseAcceptsDashesAndCase) {
  EXPECT_EQ(parse_model("DCMM"), Model::dcmm);
  EXPECT_EQ(parse_q_family("planted-sparse"), QFamily::planted_sparse);
  EXPECT_EQ(parse_q_family("decay_dense"), QFamily::decay_dense);
  EXPECT_THROW(parse_model("mm"), std::invalid_argument);
  EXPECT_THROW(parse_q_family("planted"), std::invalid_argument);
  for (auto f : {QFamily::planted_dense, QFamily::planted_sparse, QFamily::decay_dense, QFamily::decay_sparse})
    EXPECT_EQ(parse_q_family(to_string(f)), f);
}

TEST(Config, JsonRoundTrip) {
  auto c = small_config();
  c.model = Model::dcsbm;
  c.q_family = QFamily::decay_sparse;
  c.alpha = 0.1;
  c.renormalize_weights = true;
  const auto back = config_from_json(nlohmann::json::parse(to_json(c).dump()));
  EXPECT_EQ(to_json(back), to_json(c));
}

TEST(Config, MissingKeysKeepDefaults) {
  const auto c = config_from_json(nlohmann::json::parse(R"({"n": 300, "K_grid": [3]})"));
  EXPECT_EQ(c.n, 300u);
  EXPECT_EQ(c.K_grid, std::vector<std::size_t>{3});
  EXPECT_EQ(c.K0_grid, std::vector<std::size_t>{3});
  EXPECT_EQ(c.replicates, 200u);
  EXPECT_EQ(c.calibration_replicates, 1000u);
  EXPECT_EQ(c.model, Model::sbm);
}

TEST(Config, LoadFromFile) {
  const auto path = std::filesystem::temp_directory_path() / "eigengap_test_config.json";
  std::ofstream(path) << R"({"model": "dcmm", "q_family": "decay-dense", "n": 240, "seed": 9})";
  const auto c = load_config(path);
  EXPECT_EQ(c.model, Model::dcmm);
  EXPECT_EQ(c.q_family, QFamily::decay_dense);
  EXPECT_EQ(c.seed, 9u);
  std::ofstream(path) << "{ nope";
  EXPECT_THROW(load_config(path), std::invalid_argument);
  std::ofstream(path) << R"({"n": "many"})";
  EXPECT_THROW(load_config(path), std::invalid_argument);
  std::filesystem::remove(path);
  EXPECT_THROW(load_config(path), std::runtime_error);
}

TEST(Config, Validation) {
  auto c = small_config();
  EXPECT_NO_THROW(c.validate());
  c.K_grid = {7};
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = small_config();
  c.model = Model::dcmm;
  c.K_grid = {1};
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c.K_grid = {7};
  EXPECT_NO_THROW(c.validate());
  c = small_config();
  c.K0_grid = {200};
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = small_config();
  c.alpha = 0.005;
  EXPECT_THROW(c.validate(), std::invalid_argument);
}

TEST(Design, MatchesModel) {
  const auto sbm = build_design(Model::sbm, QFamily::planted_dense, 120, 3, 1);
  EXPECT_TRUE(sbm.spec.weights.all_ones());
  EXPECT_TRUE(sbm.spec.membership.all_pure());
  EXPECT_EQ(sbm.spec.Q(0, 0), 0.5);
  EXPECT_FALSE(sbm.options.clip_to_unit);

  const auto dcmm = build_design(Model::dcmm, QFamily::decay_dense, 600, 3, 1);
  EXPECT_FALSE(dcmm.spec.membership.all_pure());
  EXPECT_FALSE(dcmm.spec.weights.all_ones());
  EXPECT_TRUE(dcmm.options.clip_to_unit);
  EXPECT_NO_THROW(netmodel::build_probability_matrix(dcmm.spec, dcmm.options));

  const auto sparse = build_design(Model::dcsbm, QFamily::planted_sparse, 600, 3, 1);
  EXPECT_NEAR(sparse.spec.Q(0, 1), 0.028614267885080741, 1e-16);
  EXPECT_NEAR(sparse.spec.Q(0, 0), 5.0 * 0.028614267885080741, 1e-15);
  EXPECT_FALSE(sparse.options.clip_to_unit);

  const auto renorm = build_design(Model::dcsbm, QFamily::planted_dense, 120, 3, 1, true);
  double sum = 0.0;
  for (std::size_t i = 0; i < 40; ++i) sum += renorm.spec.weights[i];
  EXPECT_NEAR(sum, 40.0, 1e-10);
}

TEST(Csv, EmptyTableIsHeaderOnly) {
  RejectionTable t;
  EXPECT_EQ(table_csv(t), "K0,K,rejection_rate,replicates,failures\n");
  EXPECT_TRUE(parse_table_csv(table_csv(t)).empty());
}

TEST(Csv, SingleCell) {
  RejectionTable t;
  t.cells.push_back({3, 3, 0.055, 200, 0});
  EXPECT_EQ(table_csv(t), "K0,K,rejection_rate,replicates,failures\n3,3,0.055,200,0\n");
}

TEST(Csv, RoundTripIsExact) {
  RejectionTable t;
  t.cells = {{1, 1, 1.0 / 3.0, 7, 1}, {1, 2, 0.1 + 0.2, 9, 0}, {2, 2, 0.0, 5, 5}, {2, 3, 1.0, 3, 0}};
  EXPECT_EQ(parse_table_csv(table_csv(t)), t.cells);
}

TEST(Csv, NanSurvivesRoundTrip) {
  RejectionTable t;
  t.cells.push_back({2, 2, std::nan(""), 4, 4});
  const auto back = parse_table_csv(table_csv(t));
  ASSERT_EQ(back.size(), 1u);
  EXPECT_TRUE(std::isnan(back[0].rejection_rate));
  EXPECT_TRUE(back[0].flagged());
}

TEST(Csv, MalformedInput) {
  EXPECT_THROW(parse_table_csv("a,b\n"), std::invalid_argument);
  EXPECT_THROW(parse_table_csv("K0,K,rejection_rate,replicates,failures\n1,2,3\n"), std::invalid_argument);
  EXPECT_THROW(parse_table_csv("K0,K,rejection_rate,replicates,failures\n1,x,0.5,3,0\n"), std::invalid_argument);
}

TEST(Export, WritesCsvAndSidecar) {
  RejectionTable t;
  t.cells = {{3, 3, 0.05, 20, 3}};
  t.config = to_json(small_config());
  const auto csv = std::filesystem::temp_directory_path() / "eigengap_test_export.csv";
  export_table(t, csv);
  EXPECT_EQ(slurp(csv), table_csv(t));
  auto json_path = csv;
  json_path.replace_extension(".json");
  const auto doc = nlohmann::json::parse(slurp(json_path));
  EXPECT_EQ(doc.at("config"), t.config);
  EXPECT_TRUE(doc.at("cells")[0].at("flagged").get<bool>());
  EXPECT_EQ(doc.at("total_failures").get<std::size_t>(), 3u);
  std::filesystem::remove(csv);
  std::filesystem::remove(json_path);
  EXPECT_THROW(export_table(t, "/nonexistent-dir/x.csv"), std::runtime_error);
}

TEST(Experiment, UpperTriangularGrid) {
  std::size_t progress_calls = 0;
  const auto t = run_experiment(small_config(), shared_calibrator(), [&](const Cell&) { ++progress_calls; });
  ASSERT_EQ(t.cells.size(), 5u);
  EXPECT_EQ(progress_calls, 5u);
  for (const auto& c : t.cells) {
    EXPECT_LE(c.K0, c.K);
    EXPECT_EQ(c.replicates, 12u);
    EXPECT_GE(c.rejection_rate, 0.0);
    EXPECT_LE(c.rejection_rate, 1.0);
  }
  EXPECT_EQ(t.find(3, 2), nullptr);
  ASSERT_NE(t.find(2, 4), nullptr);
  EXPECT_EQ(t.config.at("n").get<std::size_t>(), 120u);
}

TEST(Experiment, IndependentOfWorkerCount) {
  auto one = small_config();
  auto many = small_config();
  many.workers = 4;
  EXPECT_EQ(run_experiment(one, shared_calibrator()).cells, run_experiment(many, shared_calibrator()).cells);
}

TEST(Experiment, IndependentOfCellOrderAndGridShape) {
  const auto full = run_experiment(small_config(), shared_calibrator());
  auto shuffled = small_config();
  shuffled.K_grid = {4, 2, 3};
  shuffled.K0_grid = {3, 2};
  EXPECT_EQ(run_experiment(shuffled, shared_calibrator()).cells, full.cells);
  auto single = small_config();
  single.K_grid = {4};
  single.K0_grid = {3};
  const auto one = run_experiment(single, shared_calibrator());
  ASSERT_EQ(one.cells.size(), 1u);
  EXPECT_EQ(one.cells[0], *full.find(3, 4));
}
