/**
 * @file test_group.cpp
 * @brief GL2 elements, ball sampling, invertible perturbation and finite
 *        permutation actions.
 */
#include "orbitlab/group.hpp"

#include <gtest/gtest.h>

#include <numbers>
#include <random>

using namespace orbitlab;

TEST(GL2Element, RejectsSingular) {
    EXPECT_THROW(GL2Element(1.0, 2.0, 2.0, 4.0), UsageError);
    EXPECT_THROW(GL2Element(Mat2::Zero()), UsageError);
    EXPECT_NO_THROW(GL2Element(1.0, 0.0, 0.0, 1e-6));
}

TEST(GL2Element, ApplyExamples) {
    const Vec2 p = GL2Element::identity().apply({3.0, -2.0});
    EXPECT_EQ(p, Vec2(3.0, -2.0));

    const Vec2 r = GL2Element::rotation(std::numbers::pi / 2).apply({1.0, 0.0});
    EXPECT_NEAR(r.x(), 0.0, 1e-15);
    EXPECT_NEAR(r.y(), 1.0, 1e-15);

    const Vec2 s = apply(GL2Element(2.0, 0.0, 0.0, 0.5), {1.0, 1.0});
    EXPECT_DOUBLE_EQ(s.x(), 2.0);
    EXPECT_DOUBLE_EQ(s.y(), 0.5);
}

TEST(GL2Element, GroupLaws) {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    for (int trial = 0; trial < 200; ++trial) {
        Mat2 a, b;
        a << u(rng), u(rng), u(rng), u(rng);
        b << u(rng), u(rng), u(rng), u(rng);
        if (std::abs(a.determinant()) < 1e-3 || std::abs(b.determinant()) < 1e-3) continue;
        const GL2Element g(a), h(b);
        const Vec2 p(u(rng), u(rng));
        EXPECT_LT(((g * h).apply(p) - g.apply(h.apply(p))).norm(), 1e-12);
        EXPECT_LT((g * g.inverse()).matrix().isApprox(Mat2::Identity(), 1e-10) ? 0.0 : 1.0, 0.5);
        EXPECT_NEAR((g * h).det(), g.det() * h.det(), 1e-10 * (1.0 + std::abs(g.det() * h.det())));
    }
}

TEST(SampleBall, StaysInsideBall) {
    const auto gs = sample_ball(BallSpec{GL2Element::identity(), 0.5, 0}, 1000);
    ASSERT_EQ(gs.size(), 1000u);
    for (const auto& g : gs) {
        EXPECT_LE(frobenius_distance(g.matrix(), Mat2::Identity()), 0.5);
        EXPECT_GT(std::abs(g.det()), kSingularDet);
    }
}

TEST(SampleBall, DeterministicPerSeed) {
    const BallSpec spec{GL2Element::identity(), 0.5, 42};
    const auto a = sample_ball(spec, 500);
    const auto b = sample_ball(spec, 500);
    for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a[i].matrix(), b[i].matrix());
    const auto c = sample_ball(BallSpec{GL2Element::identity(), 0.5, 43}, 500);
    EXPECT_NE(a[0].matrix(), c[0].matrix());
}

TEST(SampleBall, MeanIsCentre) {
    const auto gs = sample_ball(BallSpec{GL2Element::identity(), 0.5, 1}, 100000);
    Mat2 mean = Mat2::Zero();
    for (const auto& g : gs) mean += g.matrix();
    mean /= static_cast<double>(gs.size());
    EXPECT_LT((mean - Mat2::Identity()).cwiseAbs().maxCoeff(), 0.01);
}

TEST(SampleBall, RadialLawIsUniformInFourDimensions) {
    // P(|g - I| <= r/2) = (1/2)^4 for the uniform 4-ball.
    const auto gs = sample_ball(BallSpec{GL2Element::identity(), 0.5, 2}, 100000);
    int inner = 0;
    for (const auto& g : gs) inner += frobenius_distance(g.matrix(), Mat2::Identity()) <= 0.25 ? 1 : 0;
    const double p = inner / 100000.0;
    EXPECT_NEAR(p, 1.0 / 16.0, 4.0 * std::sqrt(p * (1 - p) / 100000.0));
}

TEST(SampleBall, InvalidSpec) {
    EXPECT_THROW(sample_ball(BallSpec{GL2Element::identity(), 0.0, 0}, 10), UsageError);
    EXPECT_THROW(sample_ball(BallSpec{GL2Element::identity(), 0.5, 0}, 0), UsageError);
}

TEST(NearestInvertible, AlreadyInvertibleIsUnchanged) {
    const auto r = perturb_to_invertible(Eigen::MatrixXd::Identity(2, 2), Eigen::MatrixXd::Identity(2, 2), 0.1);
    EXPECT_EQ(r.t, 0.0);
    EXPECT_EQ(nearest_invertible(Mat2::Identity(), GL2Element::identity(), 0.1).matrix(), Mat2::Identity());
}

TEST(NearestInvertible, RankOneDiagonal) {
    Mat2 a;
    a << 1, 0, 0, 0;
    const auto r = perturb_to_invertible(Eigen::MatrixXd(a), Eigen::MatrixXd::Identity(2, 2), 1e-3);
    // (1-t) A + t I = diag(1, t): det = t.
    EXPECT_NE(r.t, 0.0);
    EXPECT_LE(std::abs(r.t), 1e-3);
    EXPECT_NEAR(r.matrix(0, 0), 1.0, 1e-15);
    EXPECT_NEAR(r.matrix(1, 1), r.t, 1e-15);
    EXPECT_NEAR(r.matrix.determinant(), r.t, 1e-15);
}

TEST(NearestInvertible, ZeroMatrix) {
    const auto r = perturb_to_invertible(Eigen::MatrixXd::Zero(2, 2), Eigen::MatrixXd::Identity(2, 2), 1e-3);
    EXPECT_TRUE(r.matrix.isApprox(r.t * Eigen::MatrixXd::Identity(2, 2)));
    EXPECT_NEAR(r.matrix.determinant(), r.t * r.t, 1e-18);
    EXPECT_GT(std::abs(r.matrix.determinant()), kSingularDet);
}

TEST(NearestInvertible, ErrorsAreReported) {
    EXPECT_THROW(nearest_invertible(Mat2::Zero(), GL2Element::identity(), 0.0), UsageError);
    // det((1-t)0 + tI) = t^2 needs |t| > 1e-6, impossible within delta 1e-9.
    EXPECT_THROW(nearest_invertible(Mat2::Zero(), GL2Element::identity(), 1e-9), NumericalError);
}

TEST(NearestInvertible, RandomRankOneBattery) {
    std::mt19937_64 rng(5);
    std::normal_distribution<double> n(0.0, 1.0);
    for (int k = 0; k < 500; ++k) {
        const Vec2 u(n(rng), n(rng)), v(n(rng), n(rng));
        const Mat2 a = u * v.transpose();
        const auto g = nearest_invertible(a, GL2Element::identity(), 1e-3);
        EXPECT_GT(std::abs(g.det()), kSingularDet);
        // Distance travelled is t |I - A|, with |t| <= delta.
        EXPECT_LE(frobenius_distance(g.matrix(), a), 1e-3 * frobenius_distance(Mat2::Identity(), a) + 1e-15);
    }
}

TEST(Permutation, ComposeAndInvert) {
    const Permutation a{1, 2, 0}, b{0, 2, 1};
    const Permutation ab = compose(a, b);  // a after b
    for (int i = 0; i < 3; ++i) EXPECT_EQ(ab[i], a[b[i]]);
    EXPECT_EQ(compose(a, invert(a)), identity_permutation(3));
}

struct OrbitCase {
    std::string group;
    std::size_t order;
    std::size_t orbit;
    std::size_t stabilizer;
};

class OrbitStabilizerIdentity : public ::testing::TestWithParam<OrbitCase> {};

TEST_P(OrbitStabilizerIdentity, IdentityHolds) {
    const auto& c = GetParam();
    const FiniteAction action = FiniteAction::from_name(c.group);
    EXPECT_EQ(action.order(), c.order);
    for (std::size_t x = 0; x < action.degree(); ++x) {
        const auto os = finite_orbit_stabilizer(action, x);
        EXPECT_EQ(os.orbit.size(), c.orbit) << c.group << " x=" << x;
        EXPECT_EQ(os.stabilizer.size(), c.stabilizer) << c.group << " x=" << x;
        EXPECT_EQ(os.orbit.size() * os.stabilizer.size(), action.order());
    }
}

INSTANTIATE_TEST_SUITE_P(Groups, OrbitStabilizerIdentity,
                         ::testing::Values(OrbitCase{"D4", 8, 4, 2}, OrbitCase{"S3", 6, 3, 2}, OrbitCase{"C6", 6, 6, 1},
                                           OrbitCase{"trivial5", 1, 1, 1}, OrbitCase{"D6", 12, 6, 2},
                                           OrbitCase{"S4", 24, 4, 6}, OrbitCase{"C1", 1, 1, 1}));

TEST(FiniteAction, StabilizerIsSubgroup) {
    for (const std::string name : {"D4", "S4", "D5", "C8"}) {
        const FiniteAction action = FiniteAction::from_name(name);
        for (std::size_t x = 0; x < action.degree(); ++x) {
            const auto os = finite_orbit_stabilizer(action, x);
            for (int i : os.stabilizer) {
                for (int j : os.stabilizer) {
                    const auto prod = compose(action.elements()[i], action.elements()[j]);
                    EXPECT_EQ(prod[x], static_cast<int>(x));
                }
            }
        }
    }
}

TEST(FiniteAction, RejectsNonClosedSets) {
    EXPECT_THROW(FiniteAction({Permutation{0, 1, 2}, Permutation{1, 2, 0}}, {"a", "b", "c"}, "bad"), UsageError);
    EXPECT_THROW(FiniteAction::from_name("Q8"), UsageError);
    EXPECT_THROW(FiniteAction::cyclic(0), UsageError);
    EXPECT_THROW(FiniteAction::symmetric(9), UsageError);
}

TEST(FiniteAction, GroundLabels) {
    const auto s3 = FiniteAction::symmetric(3);
    EXPECT_EQ(s3.ground_set()[0], "1");
    EXPECT_EQ(s3.index_of("3"), 2u);
    const auto os = finite_orbit_stabilizer(s3, s3.index_of("1"));
    EXPECT_EQ(os.orbit.size(), 3u);
    EXPECT_EQ(os.stabilizer.size(), 2u);
}

TEST(Seeding, StreamsDifferAndRepeat) {
    auto a = stream_engine(0, 0), b = stream_engine(0, 0), c = stream_engine(0, 1);
    const auto x = a();
    EXPECT_EQ(x, b());
    EXPECT_NE(x, c());
}
