// Two constant experts on the binary log-loss game, run through the AA and the
// DFA side by side on the same outcomes.
#include <cstdio>

#include "pea/pea.hpp"

int main() {
  using namespace pea;
  Game game = builtin_game(GameName::log, 2);
  const auto prior = Distribution::uniform(2);
  AAState aa = aa_init(game, 1.0, 1.0, prior);
  Supermartingale dfa = dfa_init(canonical_proper_loss(game, 1.0), 1.0, 1.0, prior);

  std::vector<LossVector> advice{game.prediction({0.8, 0.2}), game.prediction({0.3, 0.7})};
  Rng rng(2024);
  for (int n = 1; n <= 10; ++n) {
    std::size_t omega = rng.uniform() < 0.7 ? 1 : 0;
    auto [d_aa, next_aa] = aa_step(aa, advice, omega);
    auto [d_dfa, next_dfa, slack] = dfa_step(dfa, advice, omega);
    std::printf("step %2d  AA p=%.6f  DFA p=%.6f  outcome %zu  slack %.1e\n", n, d_aa.back(), d_dfa.back(), omega,
                slack);
    aa = next_aa;
    dfa = next_dfa;
  }
  std::printf("losses: AA %.4f  DFA %.4f  experts %.4f %.4f\n", aa.cumulative_loss, dfa.cumulative_loss,
              aa.per_expert_loss[0], aa.per_expert_loss[1]);
}
