#include <gtest/gtest.h>

#include <sstream>
#include <string>

#include "pergrad/serialize.hpp"
#include "pergrad/verify.hpp"

namespace pergrad {
namespace {

TEST(NetworkJsonTest, FieldNames) {
  NetworkSpec net;
  net.layers = {{2, 1, ActivationKind::relu, true}};
  net.weights = {Matrix{{0.5}, {-1}, {0.25}}};
  net.loss = LossKind::mean_squared_error;
  const auto j = network_to_json(net);
  EXPECT_EQ(j.at("layers")[0].at("in"), 2);
  EXPECT_EQ(j.at("layers")[0].at("out"), 1);
  EXPECT_EQ(j.at("layers")[0].at("activation"), "relu");
  EXPECT_EQ(j.at("layers")[0].at("bias"), true);
  EXPECT_EQ(j.at("loss"), "mean_squared_error");
  EXPECT_EQ(j.at("weights")[0], json::parse("[0.5, -1, 0.25]"));
  EXPECT_FALSE(j.contains("loss_scale"));
}

TEST(NetworkJsonTest, RoundTripsRandomNetworks) {
  for (std::size_t idx = 0; idx < 40; ++idx) {
    auto net = make_random_case(11, idx).net;
    if (idx % 7 == 0) net.loss_scale = 0.3;
    const auto text = network_to_json(net).dump();
    EXPECT_EQ(network_from_json(json::parse(text)), net);
  }
}

TEST(NetworkJsonTest, RejectsBadDocuments) {
  auto j = json::parse(R"({"layers":[{"in":2,"out":1,"activation":"relu","bias":false}],
                           "loss":"sum_of_outputs","weights":[[1,2,3]]})");
  EXPECT_THROW(network_from_json(j), ShapeError);
  j["weights"] = json::array();
  EXPECT_THROW(network_from_json(j), ShapeError);
  j["weights"] = json::parse("[[1,2]]");
  j["layers"][0]["activation"] = "swish";
  EXPECT_THROW(network_from_json(j), std::invalid_argument);
  j["layers"][0]["activation"] = "relu";
  EXPECT_NO_THROW(network_from_json(j));
  j.erase("loss");
  EXPECT_THROW(network_from_json(j), json::exception);
}

BenchReport sample_report() {
  BenchConfig cfg;
  cfg.layer_dims = {12, 8, 3};
  cfg.batch_size = 5;
  cfg.trials = 3;
  return run_bench(cfg);
}

TEST(ReportJsonTest, RoundTrips) {
  const auto r = sample_report();
  EXPECT_EQ(report_from_json(json::parse(report_to_json(r).dump())), r);
}

TEST(ReportJsonTest, MethodFieldNames) {
  const auto j = report_to_json(sample_report());
  ASSERT_EQ(j.at("methods").size(), 2u);
  for (const auto& m : j.at("methods")) {
    for (const char* key : {"method", "wall_ns_median", "wall_ns_min", "flops_forward",
                            "flops_backward", "flops_norms_extra", "s_checksum"}) {
      EXPECT_TRUE(m.contains(key)) << key;
    }
  }
  EXPECT_EQ(j.at("version"), kVersion);
  EXPECT_EQ(j.at("config").at("layer_dims"), json::parse("[12, 8, 3]"));
}

TEST(ReportCsvTest, OneRowPerMethod) {
  const auto r = sample_report();
  std::istringstream in(report_to_csv(r));
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line,
            "method,wall_ns_median,wall_ns_min,flops_forward,flops_backward,flops_norms_extra,"
            "s_checksum");
  std::getline(in, line);
  EXPECT_EQ(line.rfind("trick,", 0), 0u);
  std::getline(in, line);
  EXPECT_EQ(line.rfind("naive,", 0), 0u);
  EXPECT_FALSE(std::getline(in, line));
}

TEST(ClipJsonTest, RoundTrips) {
  BenchConfig cfg;
  cfg.layer_dims = {4, 3, 2};
  cfg.batch_size = 3;
  const auto c = run_clip_demo(cfg, 0.01);
  const auto j = clip_to_json(c);
  for (const char* key : {"norms_before", "factors", "norms_after"}) EXPECT_TRUE(j.contains(key));
  EXPECT_EQ(clip_from_json(json::parse(j.dump())), c);
}

}  // namespace
}  // namespace pergrad
