# %% The transfer gate: a reward variance ratio with a look-back window
#
# After every episode the controller computes the variance of the trailing
# reward window and divides by the largest full-window variance seen so far.
# The ratio starts at 1, stays near 1 while the reward is noisy, and collapses
# once learning settles; crossing the cut-off (0.3 by default) with a full
# window declares the source task learned.

import numpy as np

from mflight.ctl import TransferController

rng = np.random.default_rng(7)

# a stylized training curve: noisy plateau, noisy improvement, convergence
noisy = rng.normal(-0.012, 0.004, 150)
improving = -0.012 + 0.005 * np.linspace(0, 1, 150) + rng.normal(0, 0.004, 150)
converged = rng.normal(-0.007, 0.0003, 150)
rewards = np.concatenate([noisy, improving, converged])

ctrl = TransferController(k=50, gamma_cut=0.3)
for r in rewards:
    ctrl.update(r)

print(f"{'episode':>8} {'window var':>12} {'beta':>8}")
for e in range(25, len(rewards) + 1, 25):
    print(f"{e:8d} {ctrl.xi_history[e - 1]:12.3e} {ctrl.beta_history[e - 1]:8.3f}")

print(f"\ncompleted: {ctrl.complete} at episode {ctrl.complete_episode} "
      f"(cut-off {ctrl.gamma_cut}, window {ctrl.k})")

# %% Scale invariance: the ratio cancels the reward scale.
ctrl_scaled = TransferController(k=50, gamma_cut=0.3)
for r in rewards:
    ctrl_scaled.update(0.5 * r)
same = np.array_equal(ctrl_scaled.beta_history, ctrl.beta_history)
print(f"halving every reward leaves every beta unchanged: {same}")
