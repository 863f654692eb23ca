#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "envdebias/objective.hpp"
#include "gradcheck.hpp"
#include "support.hpp"

namespace envdebias {
namespace {

TEST(ObjectiveGradients, MatchFiniteDifferences) {
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    const auto e = testing::random_loss_gradient_errors(seed);
    EXPECT_LT(e.cl, 1e-4) << "seed " << seed;
    EXPECT_LT(e.reg, 1e-4) << "seed " << seed;
    EXPECT_EQ(e.kl_theta, 0.0) << "seed " << seed;
    EXPECT_LT(e.kl_q, 1e-4) << "seed " << seed;
    EXPECT_LT(e.total, 1e-4) << "seed " << seed;
  }
}

struct Fixture {
  std::mt19937_64 rng{5};
  ParamStore params = init_model(ModelDims{3, 4, 3, 2}, 2);
  std::vector<PropagationGraph> graphs;
  std::vector<PairSample> pairs;

  Fixture() {
    for (int i = 0; i < 4; ++i) {
      graphs.push_back(testing::random_tree(rng, 2 + i, 3));
      pairs.push_back(sample_negatives(graphs.back(), rng()));
    }
  }

  std::vector<GraphTerms> terms(Tape& tape, const ObjectiveOptions& o) {
    std::vector<GraphTerms> out;
    const auto layout = ModelParams::resolve(params);
    for (std::size_t i = 0; i < graphs.size(); ++i)
      out.push_back(graph_terms(tape, graphs[i], normalize_adjacency(graphs[i]), pairs[i], layout, o));
    return out;
  }
};

TEST(Objective, AgreesWithScalarLosses) {
  Fixture f;
  ObjectiveOptions o;
  Tape tape(f.params);
  const auto terms = f.terms(tape, o);
  const auto post = posterior_of(tape, terms, o.prior);
  const LossVars l = assemble_losses(tape, terms, post.q, o);
  std::vector<double> y1, a1, y0, a0;
  for (const auto& t : terms) {
    y1.push_back(tape.scalar(t.ll_y1));
    a1.push_back(tape.scalar(t.ll_a1));
    y0.push_back(t.ll_y0);
    a0.push_back(t.ll_a0);
  }
  EXPECT_NEAR(tape.scalar(l.cl), classification_loss(post.q, y1, y0), 1e-12);
  EXPECT_NEAR(tape.scalar(l.reg), structure_loss(post.q, a1, a0), 1e-12);
  EXPECT_NEAR(tape.scalar(l.kl), kl_loss(post.q, o.prior), 1e-12);
  EXPECT_NEAR(tape.scalar(l.total),
              total_loss(tape.scalar(l.cl), tape.scalar(l.reg), tape.scalar(l.kl), o.prior), 1e-12);
}

TEST(Objective, ZeroWeightsGiveConstantLossAndNoGradient) {
  Fixture f;
  ObjectiveOptions o;
  Tape tape(f.params);
  const auto terms = f.terms(tape, o);
  const std::vector<double> q(terms.size(), 0.0);
  const LossVars l = assemble_losses(tape, terms, q, o);
  EXPECT_NEAR(tape.scalar(l.cl), std::log(2.0), 1e-15);
  const Gradients g = tape.backward(l.total);
  for (std::size_t i = 0; i < g.size(); ++i) EXPECT_EQ(g[i].cwiseAbs().maxCoeff(), 0.0);
}

TEST(Objective, E0ConstantsDoNotChangeGradient) {
  Fixture f;
  ObjectiveOptions o;
  const std::vector<double> q{0.2, 0.9, 0.5, 0.7};
  Tape a(f.params);
  const Gradients ga = a.backward(assemble_losses(a, f.terms(a, o), q, o).total);
  Tape b(f.params);
  auto zeroed = f.terms(b, o);
  for (auto& t : zeroed) t.ll_y0 = t.ll_a0 = 0.0;
  const LossVars lb = assemble_losses(b, zeroed, q, o);
  const Gradients gb = b.backward(lb.total);
  EXPECT_NE(a.scalar(assemble_losses(a, f.terms(a, o), q, o).total), b.scalar(lb.total));
  for (std::size_t i = 0; i < ga.size(); ++i) EXPECT_EQ(ga[i], gb[i]);
}

TEST(Objective, UnitWeightsWithoutKlIsPlainLikelihood) {
  Fixture f;
  ObjectiveOptions o;
  o.include_kl = false;
  Tape tape(f.params);
  const auto terms = f.terms(tape, o);
  const std::vector<double> q(terms.size(), 1.0);
  const LossVars l = assemble_losses(tape, terms, q, o);
  double nll = 0.0, reg = 0.0;
  for (const auto& t : terms) {
    nll -= tape.scalar(t.ll_y1) / 4.0;
    reg -= tape.scalar(t.ll_a1) / 4.0;
  }
  EXPECT_NEAR(tape.scalar(l.total), nll + reg, 1e-12);
  EXPECT_EQ(tape.scalar(l.kl), 0.0);
}

}  // namespace
}  // namespace envdebias
