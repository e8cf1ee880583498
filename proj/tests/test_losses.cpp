#include <cmath>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "veingrow/losses.hpp"

using namespace veingrow;

TEST(RIouLoss, HandValues) {
  const auto r = r_iou_loss({{3, 1}, {2, 2}});
  EXPECT_DOUBLE_EQ(r.value, 0.5);
  EXPECT_EQ(r.gradient, (std::vector<double>{0.25, -0.25}));
  EXPECT_DOUBLE_EQ(r_iou_loss({{6, 2}, {4, 4}}).value, 0.5);
  const auto same = r_iou_loss({{2, 5, 7}, {2, 5, 7}});
  EXPECT_EQ(same.value, 0.0);
  EXPECT_EQ(same.gradient, (std::vector<double>{0, 0, 0}));
}

TEST(RIouLoss, UnboundedAbove) {
  EXPECT_DOUBLE_EQ(r_iou_loss({{1001}, {1}}).value, 1000.0);
}

TEST(RIouLoss, ClampsNonPositivePredictions) {
  const auto r = r_iou_loss({{-3, 0, 2}, {1, 1, 2}});
  EXPECT_EQ(r.clamped, 2);
  EXPECT_NEAR(r.value, 2 * (1 - kPredictionFloor) / 4, 1e-15);
}

TEST(RIouLoss, Errors) {
  auto code = [](const DistanceVectorPair& pair) {
    try {
      r_iou_loss(pair);
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::InternalGeometryError;
  };
  EXPECT_EQ(code({{1, 2}, {1}}), ErrorCode::ShapeError);
  EXPECT_EQ(code({{}, {}}), ErrorCode::ShapeError);
  EXPECT_EQ(code({{1}, {0}}), ErrorCode::DegenerateTarget);
  EXPECT_EQ(code({{1, 2}, {1e-10, 1e-10}}), ErrorCode::DegenerateTarget);
  EXPECT_EQ(code({{NAN}, {1}}), ErrorCode::NumericalDomain);
}

TEST(PolarIouLoss, HandValues) {
  EXPECT_EQ(polar_iou_loss({{4, 4}, {4, 4}}).value, 0.0);
  EXPECT_DOUBLE_EQ(polar_iou_loss({{3, 1}, {2, 2}}).value, std::log(5.0 / 3.0));
  EXPECT_NEAR(polar_iou_loss({{3, 1}, {2, 2}}).value, 0.5108, 1e-4);
}

// Same target, residual +1 or -1: R-IoU answers with equal magnitudes,
// the log form does not.
TEST(PolarIouLoss, AsymmetryAgainstRIou) {
  const auto r_over = r_iou_loss({{3}, {2}});
  const auto r_under = r_iou_loss({{1}, {2}});
  EXPECT_DOUBLE_EQ(r_over.gradient[0], 0.5);
  EXPECT_DOUBLE_EQ(r_under.gradient[0], -0.5);
  const auto p_over = polar_iou_loss({{3}, {2}});
  const auto p_under = polar_iou_loss({{1}, {2}});
  EXPECT_DOUBLE_EQ(p_over.gradient[0], 1.0 / 3.0);
  EXPECT_DOUBLE_EQ(p_under.gradient[0], -1.0);
  EXPECT_NE(std::abs(p_over.gradient[0]), std::abs(p_under.gradient[0]));
}

TEST(FocalLoss, HandValues) {
  EXPECT_NEAR(focal_loss(0.5, 1).value, 0.25 * 0.25 * std::log(2.0), 1e-15);
  EXPECT_NEAR(focal_loss(0.5, 1).value, 0.0433, 1e-4);
  for (double p : {0.1, 0.3, 0.7, 0.95}) {
    for (int label : {0, 1}) {
      const double target = label;
      EXPECT_NEAR(focal_loss(p, label, 0.0, 0.5).value, 0.5 * bce_loss(p, target).value, 1e-15);
      EXPECT_NEAR(focal_loss(p, label, 0.0, 0.5).gradient, 0.5 * bce_loss(p, target).gradient, 1e-12);
    }
  }
  EXPECT_LT(focal_loss(0.99, 1).value, bce_loss(0.99, 1.0).value);
  EXPECT_THROW(focal_loss(0.0, 1), Error);
  EXPECT_THROW(focal_loss(1.0, 0), Error);
  EXPECT_THROW(focal_loss(0.5, 2), Error);
}

TEST(BceLoss, HandValues) {
  EXPECT_DOUBLE_EQ(bce_loss(0.5, 0.5).value, std::log(2.0));
  for (int i = 1; i <= 9; ++i) {
    const double t = i / 10.0;
    EXPECT_NEAR(bce_loss(t, t).gradient, 0.0, 1e-12);
    EXPECT_LT(bce_loss(t, t).value, bce_loss(t + 0.01, t).value);
    EXPECT_LT(bce_loss(t, t).value, bce_loss(t - 0.01, t).value);
  }
  try {
    bce_loss(1.0, 0.5);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NumericalDomain);
  }
}

TEST(TotalLoss, Composition) {
  EXPECT_EQ(total_loss(0, 0, 0), 0.0);
  EXPECT_NEAR(total_loss(0.5, 0.0433, 0.6931), 1.2364, 1e-12);
  EXPECT_EQ(total_loss(0.5, 0.0433, 0.6931), total_loss(0.0433, 0.5, 0.6931));
  EXPECT_DOUBLE_EQ(total_loss(1, 1, 1, {2, 0, 0.5}), 2.5);
}

TEST(GradientChecks, AllPassWithinTolerance) {
  const auto rows = run_gradient_checks({});
  ASSERT_EQ(rows.size(), 400u);
  for (const auto& r : rows) EXPECT_TRUE(r.pass) << r.loss_name << " trial " << r.trial << " err " << r.max_rel_err;
  EXPECT_EQ(rows.front().loss_name, "r_iou");
  EXPECT_EQ(rows.back().loss_name, "bce");
}

TEST(GradientChecks, CorruptedGradientIsCaught) {
  GradCheckConfig cfg;
  cfg.trials = 10;
  cfg.corrupt_gradient = 1e-2;
  for (const auto& r : run_gradient_checks(cfg)) EXPECT_FALSE(r.pass) << r.loss_name;
}

TEST(GradientChecks, SeedDeterminism) {
  GradCheckConfig a;
  a.seed = 5;
  a.trials = 7;
  const auto x = run_gradient_checks(a);
  const auto y = run_gradient_checks(a);
  ASSERT_EQ(x.size(), y.size());
  for (std::size_t i = 0; i < x.size(); ++i) EXPECT_EQ(x[i].max_rel_err, y[i].max_rel_err);
}

TEST(Invariants, AllHold) {
  for (const auto& c : run_invariance_checks(0)) EXPECT_TRUE(c.pass) << c.name << ' ' << c.detail;
}

TEST(Invariants, RIouZeroOnlyOnIdentity) {
  std::mt19937_64 rng(3);
  for (int t = 0; t < 200; ++t) {
    DistanceVectorPair pair;
    for (int k = 0; k < 6; ++k) {
      const double v = 1 + static_cast<double>(rng() % 5);
      pair.target.push_back(v);
      pair.predicted.push_back(rng() % 4 == 0 ? v + 1 : v);
    }
    EXPECT_EQ(r_iou_loss(pair).value == 0.0, pair.predicted == pair.target);
    EXPECT_GE(polar_iou_loss(pair).value, 0.0);
  }
}

TEST(Report, CsvFormat) {
  std::ostringstream out;
  const std::vector<GradCheckRow> rows{{"r_iou", 0, 1.5e-9, true}, {"bce", 3, 2e-3, false}};
  write_grad_report(out, rows);
  EXPECT_EQ(out.str(), "loss_name,trial,max_rel_err,pass\nr_iou,0,1.500000e-09,true\nbce,3,2.000000e-03,false\n");
}
