#include "datashifts/csv.hpp"
#include "datashifts/report.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

using namespace datashifts;
using nlohmann::json;

namespace {

CsvTable parse(const std::string& text) {
  std::istringstream in(text);
  return read_csv(in, "test.csv");
}

std::string error_of(const std::string& text) {
  try {
    parse(text);
  } catch (const InvalidInput& e) {
    return e.what();
  }
  return "";
}

BoundReport sample_report() {
  ShiftEstimates s;
  s.s_cov = 0.1 + 0.2;  // not exactly representable in short decimal
  s.s_cpt = 1.0 / 3.0;
  s.beta = 1e-3;
  s.n_source = 250;
  s.n_target = 4000;
  s.estimator_kind = EstimatorKind::PlugIn;
  s.split_seed = 18446744073709551615ULL;
  s.num_splits = 3;
  return assemble_bound(s, LipschitzSpec{2.0 / 7.0, 1.0, 10.0}, std::exp(-1.0));
}

}  // namespace

TEST(Report, ShiftEstimatesRoundTrip) {
  const ShiftEstimates s = sample_report().shifts;
  EXPECT_EQ(json::parse(json(s).dump()).get<ShiftEstimates>(), s);
  ShiftEstimates no_cpt = s;
  no_cpt.s_cpt.reset();
  const json j = no_cpt;
  EXPECT_FALSE(j.contains("s_cpt"));
  EXPECT_EQ(json::parse(j.dump()).get<ShiftEstimates>(), no_cpt);
}

TEST(Report, BoundReportRoundTrip) {
  BoundReport r = sample_report();
  EXPECT_EQ(json::parse(dump_report(r)).get<BoundReport>(), r);
  r.target_error = 0.125;
  EXPECT_EQ(json::parse(dump_report(r)).get<BoundReport>(), r);
}

TEST(Report, PipelineJsonOmitsAbsentBound) {
  PipelineResult result;
  result.shifts = sample_report().shifts;
  EXPECT_FALSE(pipeline_json(result).contains("bound"));
  result.bound = sample_report();
  EXPECT_TRUE(pipeline_json(result).contains("bound"));
}

TEST(Report, DumpIsStable) {
  const std::string a = dump_report(sample_report());
  EXPECT_EQ(a, dump_report(sample_report()));
  EXPECT_EQ(a.back(), '\n');
  EXPECT_EQ(dump_report(json::parse(a)), a);
}

TEST(Report, MissingOrMistypedFields) {
  json j = sample_report().shifts;
  j.erase("beta");
  EXPECT_THROW(j.get<ShiftEstimates>(), InvalidInput);
  j = sample_report().shifts;
  j["n_source"] = "many";
  EXPECT_THROW(j.get<ShiftEstimates>(), InvalidInput);
  j = sample_report().shifts;
  j["estimator_kind"] = "Median";
  EXPECT_THROW(j.get<ShiftEstimates>(), InvalidInput);
}

TEST(Report, LossRoundTrip) {
  for (const auto& loss : {LossSpec::absolute_error(), LossSpec::squared_error_bounded(2.5),
                           LossSpec::cross_entropy_clamped(0.05)}) {
    const auto back = json::parse(json(loss).dump()).get<LossSpec>();
    EXPECT_EQ(back.kind, loss.kind);
    EXPECT_EQ(back.parameter, loss.parameter);
  }
  EXPECT_THROW(json({{"kind", "hinge"}}).get<LossSpec>(), InvalidInput);
  EXPECT_THROW(json({{"kind", "squared"}}).get<LossSpec>(), InvalidInput);
}

TEST(Report, LipschitzFragments) {
  auto l = lipschitz_from_fragment(json::parse(R"({"l_h": 3, "loss": {"kind": "absolute"}})"));
  EXPECT_EQ(l, (LipschitzSpec{3, 1, 1}));
  l = lipschitz_from_fragment(json::parse(R"({"layer_norms": [2, 3], "activations": [0.5],
                                              "l_loss_label": 4, "l_loss_output": 5})"));
  EXPECT_EQ(l, (LipschitzSpec{3, 4, 5}));
  l = lipschitz_from_fragment(
      json::parse(R"({"layer_norms": [2, 3, 4], "loss": {"kind": "cross-entropy", "a": 0.1}})"));
  EXPECT_DOUBLE_EQ(l.l_h, 24.0);
  EXPECT_DOUBLE_EQ(l.l_loss_output, 10.0);
  EXPECT_THROW(lipschitz_from_fragment(json::parse(R"({"loss": {"kind": "absolute"}})")), InvalidInput);
  EXPECT_THROW(lipschitz_from_fragment(json::parse(R"({"l_h": 1})")), InvalidInput);
  EXPECT_THROW(lipschitz_from_fragment(json::parse(R"([1, 2])")), InvalidInput);
  EXPECT_THROW(lipschitz_from_fragment(json::parse(R"({"l_h": -1, "l_loss_label": 1, "l_loss_output": 1})")),
               InvalidInput);
}

TEST(Csv, ReadsHeaderAndValues) {
  const auto t = parse("\xEF\xBB\xBF" "a, b ,y\n1,2,3\n\n-4.5e-1,+6,7\r\n");
  EXPECT_EQ(t.header, (std::vector<std::string>{"a", "b", "y"}));
  ASSERT_EQ(t.values.rows(), 2);
  EXPECT_EQ(t.values(1, 0), -0.45);
  EXPECT_EQ(t.values(1, 1), 6.0);
  EXPECT_EQ(t.column("y"), 2);
  EXPECT_THROW(t.column("z"), InvalidInput);
}

TEST(Csv, ReportsWhereInputIsBad) {
  EXPECT_NE(error_of("a,b\n1,\n").find("missing value at test.csv line 2, column 'b'"), std::string::npos);
  EXPECT_NE(error_of("a,b\n1,x\n").find("non-numeric value 'x'"), std::string::npos);
  EXPECT_NE(error_of("a,b\n1,nan\n").find("non-finite"), std::string::npos);
  EXPECT_NE(error_of("a,b\n1,inf\n").find("non-finite"), std::string::npos);
  EXPECT_NE(error_of("a,b\n1,2,3\n").find("has 3 fields, expected 2"), std::string::npos);
  EXPECT_NE(error_of("").find("empty"), std::string::npos);
  EXPECT_NE(error_of("a,b\n").find("no data rows"), std::string::npos);
  EXPECT_NE(error_of("a,,b\n1,2,3\n").find("empty column name"), std::string::npos);
  EXPECT_THROW(read_csv_file("/nonexistent/file.csv"), InvalidInput);
}

TEST(Csv, SplitsLabelsFromCovariates) {
  const auto t = parse("x1,y,x2\n1,10,2\n3,30,4\n");
  const auto s = sample_from_table(t, {"y"}, Domain::Target);
  EXPECT_EQ(s.dimension(), 2);
  EXPECT_EQ(s.covariates()(1, 1), 4.0);
  EXPECT_EQ((*s.labels())(1, 0), 30.0);
  EXPECT_EQ(s.domain(), Domain::Target);
  EXPECT_FALSE(sample_from_table(t, {}).has_labels());
  EXPECT_EQ(sample_from_table(t, {"x2", "y"}).labels()->row(0), Eigen::RowVector2d(2, 10));
  EXPECT_THROW(sample_from_table(t, {"y", "y"}), InvalidInput);
  EXPECT_THROW(sample_from_table(t, {"z"}), InvalidInput);
  EXPECT_THROW(sample_from_table(t, {"x1", "y", "x2"}), InvalidInput);
}

TEST(Csv, FormatDoubleRoundTrips) {
  for (double v : {0.1 + 0.2, 1.0 / 3.0, -2.5e-300, 6.0, 1e21}) {
    EXPECT_EQ(std::stod(format_double(v)), v) << format_double(v);
  }
  EXPECT_EQ(format_double(6.0), "6");
}

TEST(Csv, PlanListsNonzeroEntries) {
  TransportPlan plan;
  plan.coupling = Matrix::Zero(2, 2);
  plan.coupling(0, 1) = 0.5;
  plan.coupling(1, 0) = 0.25;
  plan.coupling(1, 1) = 0.25;
  std::ostringstream out;
  write_plan_csv(out, plan);
  EXPECT_EQ(out.str(), "row,col,mass\n0,1,0.5\n1,0,0.25\n1,1,0.25\n");
}
