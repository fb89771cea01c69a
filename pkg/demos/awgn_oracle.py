"""Double Monte Carlo MI of the 2D iid Gaussian model against numerical quadrature on AWGN."""
from airate import ChannelScenario, build_qam, double_monte_carlo, get_kind, simulate_batches, true_rate_oracle

c = build_qam(16)
print(" SNR   estimate   stderr    oracle")
for snr in range(4, 22, 2):
    sc = ChannelScenario("awgn", float(snr), n=100_000, seed=1)
    est = double_monte_carlo(simulate_batches(c, sc, 4), get_kind("2D-iidG"), "MI", c)
    print(f"{snr:4d}  {est.rate:8.4f}  {est.stderr:7.4f}  {true_rate_oracle(c, sc):8.4f}")
