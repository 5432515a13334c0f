"""
# Usage Example
"""

from spinbus.experiments import spectral_splitting, susceptibility_curve
from spinbus.fixtures import paper_chain_homogeneous
from spinbus.perturbation import j_eff_second_order_sum

bus = paper_chain_homogeneous(ratio=0.1)
chain = bus.couplers_only()

print("Splitting / 2:", spectral_splitting(bus) / 2)
print("Second-order J_eff:", j_eff_second_order_sum(chain, 0.25, 0.25, qubit_delta=2.0))

curve = susceptibility_curve(chain, "c7", "c1")
print("df_c1/df_c7:", curve.midpoint_slope)
