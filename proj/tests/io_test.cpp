#include <lpdens/io.hpp>

#include <gtest/gtest.h>

using namespace lpdens;

TEST(Io, NumbersRoundTrip)
{
  for (double v : { 0.1, 1.0 / 3.0, -2.5e-300, 12345.678 }) {
    auto s = format_number(v);
    EXPECT_EQ(std::stod(s), v);
  }
  EXPECT_EQ(format_number(std::nan("")), "");
}

TEST(Io, DensityRecordsCarryNullsForFailures)
{
  DensityEstimate ok;
  ok.x = 0.5;
  ok.h = 0.2;
  ok.f_hat = 1.1;
  ok.se = 0.1;
  ok.ci_low = 0.9;
  ok.ci_high = 1.3;
  ok.m_eff = 40;
  ok.region = "interior";
  DensityEstimate bad;
  bad.x = -3.0;
  bad.error = "support-violation";
  auto j = json::parse(density_json({ ok, bad }));
  ASSERT_EQ(j.size(), 2u);
  EXPECT_EQ(j[0]["f_hat"].get<double>(), 1.1);
  EXPECT_TRUE(j[0]["error"].is_null());
  EXPECT_TRUE(j[1]["f_hat"].is_null());
  EXPECT_EQ(j[1]["error"], "support-violation");
  for (const char* key : { "x", "v", "h", "p", "f_hat", "se", "ci_low", "ci_high", "m_eff", "region", "error" })
    EXPECT_TRUE(j[0].contains(key)) << key;

  auto csv = density_csv({ ok, bad });
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "x,v,h,p,f_hat,se,ci_low,ci_high,m_eff,region,error");
  EXPECT_NE(csv.find("-3,1,,2,,,,,0,,support-violation"), std::string::npos);
}

TEST(Io, ManipulationRecordFields)
{
  ManipulationTestResult r;
  r.warnings = { "w" };
  auto j = to_json(r);
  for (const char* key : { "cutoff", "model", "p_point", "p_infer", "h_minus", "h_plus", "n_minus",
                           "n_plus", "m_eff_minus", "m_eff_plus", "f_minus", "f_plus", "se_diff", "T",
                           "p_value", "warnings" })
    EXPECT_TRUE(j.contains(key)) << key;
  EXPECT_EQ(j["warnings"][0], "w");
}
