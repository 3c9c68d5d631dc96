#include <gtest/gtest.h>

#include <cmath>

#include "ultimax/markov_chain.hpp"
#include "ultimax/reference_models.hpp"
#include "ultimax/statistics.hpp"

using namespace ultimax;

namespace {

/// sum_{k<terms} (Q dt)^k / k!
SquareMatrix taylor_exp(const SquareMatrix& Q, double dt, int terms) {
    const std::size_t m = Q.size();
    SquareMatrix term = SquareMatrix::identity(m);
    SquareMatrix sum = term;
    SquareMatrix Qdt(m);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < m; ++j) Qdt(i, j) = Q(i, j) * dt;
    for (int k = 1; k < terms; ++k) {
        term = term * Qdt;
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < m; ++j) {
                term(i, j) /= k;
                sum(i, j) += term(i, j);
            }
    }
    return sum;
}

}  // namespace

TEST(TransitionMatrix, ZeroGeneratorIsIdentity) {
    const auto P = transition_matrix(SquareMatrix{{0.0}}, 0.1);
    EXPECT_EQ(P.P(0, 0), 1.0);
}

TEST(TransitionMatrix, ZeroStepIsIdentity) {
    const auto P = transition_matrix(reference::two_state_generator(), 0.0);
    EXPECT_EQ(P.P, SquareMatrix::identity(2));
}

TEST(TransitionMatrix, LongHorizonReachesStationaryLaw) {
    // pi Q = 0 with pi_1 + pi_2 = 1: -2.5 pi_1 + 2 pi_2 = 0, so pi = (4/9, 5/9).
    const auto P = transition_matrix(reference::two_state_generator(), 100.0);
    for (std::size_t i = 0; i < 2; ++i) {
        EXPECT_NEAR(P.P(i, 0), 4.0 / 9.0, 1e-12);
        EXPECT_NEAR(P.P(i, 1), 5.0 / 9.0, 1e-12);
    }
}

TEST(TransitionMatrix, SmallStepMatchesTaylorSeries) {
    const auto Q = reference::two_state_generator();
    const double dt = 0.005;
    const auto P = transition_matrix(Q, dt);
    const auto series = taylor_exp(Q, dt, 20);
    for (std::size_t i = 0; i < 2; ++i)
        for (std::size_t j = 0; j < 2; ++j) {
            EXPECT_NEAR(P.P(i, j), series(i, j), 1e-14);
            // First order: |P - (I + Q dt)| <= (|Q| dt)^2 / 2 e^{|Q| dt}.
            const double first = (i == j ? 1.0 : 0.0) + Q(i, j) * dt;
            EXPECT_LE(std::abs(P.P(i, j) - first), 0.5 * std::pow(4.5 * dt, 2) * std::exp(4.5 * dt));
        }
}

TEST(TransitionMatrix, ClosedFormTwoState) {
    // P(t) = Pi + e^{-(a+b)t} (I - Pi) for Q = [[-a, a], [b, -b]].
    const double a = 2.5, b = 2.0;
    for (double t : {0.01, 0.3, 1.7}) {
        const auto P = transition_matrix(reference::two_state_generator(), t);
        const double e = std::exp(-(a + b) * t);
        EXPECT_NEAR(P.P(0, 0), b / (a + b) + e * a / (a + b), 1e-13);
        EXPECT_NEAR(P.P(1, 1), a / (a + b) + e * b / (a + b), 1e-13);
    }
}

TEST(TransitionMatrix, RowsSumToOne) {
    const SquareMatrix Q{{-3.0, 1.0, 2.0}, {0.5, -0.5, 0.0}, {10.0, 20.0, -30.0}};
    const auto P = transition_matrix(Q, 2.0);
    for (std::size_t i = 0; i < 3; ++i) {
        double sum = 0.0;
        for (std::size_t j = 0; j < 3; ++j) {
            EXPECT_GE(P.P(i, j), 0.0);
            sum += P.P(i, j);
        }
        EXPECT_NEAR(sum, 1.0, 1e-15);
    }
}

TEST(TransitionMatrix, Semigroup) {
    const SquareMatrix Q{{-3.0, 1.0, 2.0}, {0.5, -0.5, 0.0}, {10.0, 20.0, -30.0}};
    const auto a = transition_matrix(Q, 0.3).P;
    const auto b = transition_matrix(Q, 0.45).P;
    const auto ab = transition_matrix(Q, 0.75).P;
    const auto prod = a * b;
    for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t j = 0; j < 3; ++j) EXPECT_NEAR(prod(i, j), ab(i, j), 1e-13);
}

TEST(SampleChain, ZeroRatesNeverJump) {
    const auto path = sample_chain(SquareMatrix(2, 0.0), 0.0, 10.0, 1, std::uint64_t{5});
    EXPECT_TRUE(path.jump_times.empty());
    EXPECT_EQ(path.state_at(7.0), 1u);
}

TEST(SampleChain, DeterministicGivenSeed) {
    const auto Q = reference::two_state_generator();
    const auto a = sample_chain(Q, 0.0, 5.0, 0, std::uint64_t{99});
    const auto b = sample_chain(Q, 0.0, 5.0, 0, std::uint64_t{99});
    EXPECT_EQ(a.jump_times, b.jump_times);
    EXPECT_EQ(a.states, b.states);
    for (std::size_t i = 0; i + 1 < a.states.size(); ++i) EXPECT_NE(a.states[i], a.states[i + 1]);
    for (double t : a.jump_times) {
        EXPECT_GT(t, 0.0);
        EXPECT_LE(t, 5.0);
    }
}

TEST(SampleChain, AbsorbingStateStops) {
    const SquareMatrix Q{{-1.0, 1.0}, {0.0, 0.0}};
    const auto path = sample_chain(Q, 0.0, 100.0, 0, std::uint64_t{3});
    ASSERT_EQ(path.jump_times.size(), 1u);
    EXPECT_EQ(path.states.back(), 1u);
}

TEST(SampleChain, MeanFirstSojourn) {
    const auto Q = reference::two_state_generator();
    for (std::size_t j0 : {0u, 1u}) {
        RunningStats sojourn;
        for (std::size_t i = 0; i < 100000; ++i) {
            RandomStream rng(derive_seed(17, i));
            sojourn.add(ChainSampler(Q, 0.0, j0, rng).next_jump());
        }
        const double expected = 1.0 / -Q(j0, j0);  // 0.4 from state 1, 0.5 from state 2
        EXPECT_NEAR(sojourn.mean(), expected, 3.0 * sojourn.std_error()) << "j0 = " << j0 + 1;
    }
}

TEST(SampleChain, OccupationMatchesTransitionMatrix) {
    const auto Q = reference::two_state_generator();
    const auto P = transition_matrix(Q, 0.3);
    RunningStats in_two;
    for (std::size_t i = 0; i < 100000; ++i)
        in_two.add(sample_chain(Q, 0.0, 0.3, 0, derive_seed(23, i)).state_at(0.3) == 1 ? 1.0 : 0.0);
    EXPECT_NEAR(in_two.mean(), P.P(0, 1), 3.0 * in_two.std_error());
}
