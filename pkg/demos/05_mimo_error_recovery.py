# %% [markdown]
# # Sparse error recovery after MMSE detection
#
# Hard MMSE decisions are mostly right, so s - s_mmse is sparse. Solving
# y - H s_mmse = H e + v with the Cauchy penalty and re-slicing s_mmse + e
# corrects many of the remaining errors.

# %%
from cauchyprox.mimo import MimoScenario, run_ber_curve

sc = MimoScenario(n_tx=16, n_rx=16, constellation="QPSK", snr_grid_db=(4, 8, 12, 16, 20),
                  n_symbols=4000, n_trials=5, seed=0)
r = run_ber_curve(sc, threads=4)
print(" SNR     ZF        MMSE      Cauchy")
for s, z, m, c in zip(r.snr_db, r.ber_zf, r.ber_mmse, r.ber_cauchy):
    print(f"{s:4.0f}  {z:.2e}  {m:.2e}  {c:.2e}")
