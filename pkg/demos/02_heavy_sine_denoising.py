# %% [markdown]
# # Denoising Heavy Sine in the frequency domain
#
# The 128-sample signal is synthesised from 512 complex frequencies through a
# partial inverse DFT. The Cauchy, L1 and TV estimates share the noise
# realisation of each trial.

# %%
import numpy as np

from cauchyprox.experiments import Denoise1DParams, run_denoise_1d

params = Denoise1DParams()
print(params)

# %%
for snr in (4.0, 8.0, 12.0):
    r = run_denoise_1d(128, 512, snr, trials=20, seed=0, params=params, threads=4)
    row = "  ".join(f"{m}: rmse {r.mean('rmse', m):.3f} mae {r.mean('mae', m):.3f}" for m in r.methods)
    print(f"SNR {snr:4.1f} dB  {row}")

# %% [markdown]
# One reconstruction from the last run, for a quick visual check.

# %%
ex = r.example
for k in range(0, 128, 16):
    print(f"t={k / 128:.3f} clean {ex['clean'][k]:6.2f} noisy {ex['noisy'][k]:6.2f} cauchy {ex['cauchy'][k]:6.2f}")
