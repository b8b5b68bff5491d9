"""Robustness radii on the CPS and counterterrorism fixtures, next to the sampled radii."""
from hyperssg.instances import fixture
from hyperssg.robustness import robustness_report

g, _ = fixture("counterterrorism")
rep = robustness_report(g, which=("msse",))
print(f"counterterrorism: delta_msse={rep.delta_msse:.4f} sampled={rep.empirical_msse:.4f} "
      f"sigma={rep.ingredients.sigma:.3f} tags={rep.tags}")

for dmax in (1.0, 2.0, 3.0):
    rep = robustness_report(fixture("cps", dmax=dmax)[0])
    print(f"cps D=(0,{dmax:g}): delta_msse={rep.delta_msse:.4f} (sampled {rep.empirical_msse:.4f}), "
          f"delta_dsse={rep.delta_dsse:.4f} (sampled {rep.empirical_dsse:.4f})")

g, info = fixture("robust_toy")
rep = robustness_report(g, x_sse=info.params["x_sse"], empirical=False)
print(f"robust_toy at x=(1,0): delta_msse={rep.delta_msse:g}, delta_dsse={rep.delta_dsse:g}")
