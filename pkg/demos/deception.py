"""Deception walk-through: the leader picks the followers' observation before committing."""
import numpy as np

from hyperssg.equilibrium import check_hne, solve_dsse, solve_msse
from hyperssg.instances import InstanceGenConfig, fixture, generate_random
from hyperssg.model import StrategyProfile, leader_utility
from hyperssg.stability import certify_dsse_stability, trick_condition

np.set_printoptions(precision=4, suppress=True)

g, info = fixture("example2")
p = info.params["dsse_profile"]
prof = StrategyProfile(np.array(p["x"]), np.array(p["y"]))
h = check_hne(g, prof, p["theta"])
print(f"example2 published profile: leader utility {leader_utility(g, prof.x, prof.y):g}, "
      f"HNE={h.is_hne}, deviation {h.violation}")
th, r = solve_dsse(g)
print(f"  solver DSSE: theta*={th}, x={r.x}, value {r.leader_value:g}")
print(f"  MSSE at theta=1: value {solve_msse(g, [1.0]).leader_value:g}")

print("\nrandom deception games (trick condition as stated vs full-cover variant)")
for s in range(4):
    g = generate_random(InstanceGenConfig(2, 2, seed=s, mode="deception"))
    rep = certify_dsse_stability(g)
    full = trick_condition(g, full_cover=True) is not None
    print(f"  {g.name}: trick={rep.condition_holds} full-cover={full} HNE={rep.hne.is_hne} "
          f"value={rep.equilibrium.leader_value:.3f} expected={rep.expected_value:.3f}")
