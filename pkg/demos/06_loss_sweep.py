"""
Sweeping the detector efficiency
================================

The sweep helper reruns a scenario over a parameter grid with one seed, so
the differences between rows come from the physics alone. The command line
equivalent is ``eprtrack sweep loss 1.0,0.9,0.8,0.7 tenDB_fig3``.
"""

from eprtrack.scenario import load_scenario, sweep

sc = load_scenario("tenDB_fig3")
rows = sweep(sc, "loss", [1.0, 0.9, 0.8, 0.7, 0.5])
print(" eta   var_u   var_v   product  predicted  factor")
for row in rows:
    print(f"{row['value']:.2f}  {row['var_u']:.4f}  {row['var_v']:.4f}  {row['product']:.4f}"
          f"   {row['predicted']:.4f}   {row['factor']:5.2f}")

# %%
# Near 50 % loss the product climbs back over the semiclassical 2.
