#include <gtest/gtest.h>

#include <sstream>

#include "formctl/errors.hpp"
#include "formctl/trace_csv.hpp"
#include "spatial7_setup.hpp"

namespace formctl {
namespace {

SimTrace small_trace(FollowerVariant v, std::uint64_t seed) {
  const auto s = testing::simple_setup(2, 1.0, 0.5, 0.0, v);
  InitialConditionSpec spec;
  spec.leader_error = 0.3;
  spec.leader_estimate_error = 0.3;
  spec.follower_spread = 1.0;
  const auto init = make_initial_state(spec, s.plan, s.shape, 2, seed);
  SimConfig cfg;
  cfg.record_every = 25;
  return run_scenario(s.mats, s.plan, s.shape, s.gains, cfg, v, init);
}

void expect_equal(const SimTrace& a, const SimTrace& b) {
  EXPECT_EQ(a.n, b.n);
  EXPECT_EQ(a.n_leaders, b.n_leaders);
  EXPECT_EQ(a.m, b.m);
  EXPECT_EQ(a.times, b.times);
  ASSERT_EQ(a.samples(), b.samples());
  for (int k = 0; k < a.samples(); ++k) {
    EXPECT_EQ(a.x[k], b.x[k]);
    EXPECT_EQ(a.eta[k], b.eta[k]);
    EXPECT_EQ(a.u[k], b.u[k]);
    EXPECT_EQ(a.err[k], b.err[k]);
  }
}

TEST(TraceCsv, Header) {
  std::ostringstream out;
  write_trace_csv(out, small_trace(FollowerVariant::kOmegaHat, 1));
  const std::string text = out.str();
  const std::string header = text.substr(0, text.find('\n'));
  EXPECT_EQ(header,
            "t,agent,role,px,py,pz,d1x,d1y,d1z,eta0,eta1,eta2,eta3,eta4,eta5,"
            "e0,e1,e2,e3,e4,e5,e6,e7,e8,e9,e10,e11,ux,uy,uz,err_norm");
}

TEST(TraceCsv, RoundTripIsExact) {
  for (auto v : {FollowerVariant::kOmegaHat, FollowerVariant::kStateFeedback}) {
    const auto trace = small_trace(v, 2);
    std::stringstream buf;
    write_trace_csv(buf, trace);
    const auto back = read_trace_csv(buf);
    expect_equal(trace, back);
    std::ostringstream again;
    write_trace_csv(again, back);
    EXPECT_EQ(buf.str(), again.str());
  }
}

TEST(TraceCsv, SameSeedSameBytes) {
  std::ostringstream a, b;
  write_trace_csv(a, small_trace(FollowerVariant::kOmegaBar, 5));
  write_trace_csv(b, small_trace(FollowerVariant::kOmegaBar, 5));
  EXPECT_EQ(a.str(), b.str());
}

TEST(TraceCsv, RejectsGarbage) {
  std::istringstream bad_header("a,b,c\n1,2,3\n");
  EXPECT_THROW(read_trace_csv(bad_header), Error);
  std::ostringstream out;
  write_trace_csv(out, small_trace(FollowerVariant::kOmegaHat, 1));
  std::string text = out.str();
  text.replace(text.find('\n') + 1, 1, "x");
  std::istringstream bad_value(text);
  EXPECT_THROW(read_trace_csv(bad_value), Error);
}

}  // namespace
}  // namespace formctl
