"""Build 16-QAM, print its Gray labels and the 4D/2D/1D views of a few symbols."""
import numpy as np

from airate import ChannelScenario, build_qam, make_view, simulate

c = build_qam(16)
print(f"{c.order} points, mean energy {np.mean(np.sum(c.points ** 2, axis=1)):.3f}")
print(c.to_text())

batch = simulate(c, ChannelScenario("awgn", 20.0, n=3, seed=0))
for d in (4, 2, 1):
    view = make_view(c, d)
    print(f"d={d}: {view.point_count} points, {view.slots} slot(s), "
          f"{view.bits_per_slot} bits per slot, first symbol -> {view.split(batch.tx[:1])[0]}")
