"""Misperception walk-through: biased follower observations, the SOL certificate, and a
three-follower game where the certificate is met but the MSSE is not stable."""
import numpy as np

from hyperssg.equilibrium import solve_msse
from hyperssg.instances import InstanceGenConfig, fixture, generate_random
from hyperssg.model import attack_values
from hyperssg.stability import certify_msse_stability

np.set_printoptions(precision=4, suppress=True)

g, _ = fixture("example1")
print("example1: leader value tracks the follower's observation")
for t in (0.2, 0.5, 0.8):
    r = solve_msse(g, [t])
    print(f"  theta'={t}: x={r.x}, leader value={r.leader_value:.4f}, target={r.chosen_targets}")

g, _ = fixture("slsf")
rep = certify_msse_stability(g)
print(f"\nslsf: SOL lambda={rep.certificate.lam:.4f}, HNE={rep.hne.is_hne} -> "
      f"{'STABLE' if rep.stable else 'NOT-CERTIFIED'}")

g = generate_random(InstanceGenConfig(3, 3, seed=3030))
rep = certify_msse_stability(g)
eq = rep.equilibrium
print(f"\n{g.name}: SOL nonempty={rep.condition_holds} (lambda={rep.certificate.lam:.4f})")
print(f"  MSSE x={eq.x}, follower targets={eq.chosen_targets}, value={eq.leader_value:.2f}")
print(f"  follower best-response sets: {rep.hne.follower_br_sets}")
print(f"  attack values:\n{attack_values(g, eq.x, [0.0])}")
print(f"  HNE={rep.hne.is_hne}; leader deviation: {rep.hne.violation}")
