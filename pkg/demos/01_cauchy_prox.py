# %% [markdown]
# # The Cauchy proximal operator
#
# The prox of h(u) = log((gamma^2 + u^2) / gamma) with step mu is a root of a
# cubic. When gamma >= sqrt(mu)/2 the prox objective is convex, the cubic has
# one real root, and Cardano's formula gives it in closed form.

# %%
import numpy as np

from cauchyprox import gamma_min_step, prox_cauchy, prox_hard, prox_l1, prox_objective

x = np.linspace(-5, 5, 11)
print("x       ", x)
print("soft    ", prox_l1(x, 1.0))
print("hard    ", prox_hard(x, 1.0))
print("cauchy  ", np.round(prox_cauchy(x, 1.0, 1.0), 3))

# %% [markdown]
# Large inputs are barely shrunk (like hard thresholding) while small ones
# are pulled towards zero (like soft thresholding).

# %%
for xv in (0.5, 2.0, 10.0, 100.0):
    z = prox_cauchy(xv, 0.5, 1.0)
    print(f"x={xv:6.1f}  prox={z:9.4f}  shrinkage={xv - z:.4f}")

# %% [markdown]
# Below the critical scale the objective can have two local minima. The
# implementation evaluates every real root and keeps the global minimiser.

# %%
mu = 1.0
gamma = 0.2 * gamma_min_step(mu)
u = np.linspace(-1, 4, 50_001)
for xv in (1.5, 2.0, 2.5):
    z = prox_cauchy(xv, gamma, mu)
    brute = u[np.argmin(prox_objective(u, xv, gamma, mu))]
    print(f"x={xv}: closed form {z:.5f}, grid search (step 1e-4) {brute:.5f}")

# %%
try:
    import matplotlib.pyplot as plt
except ImportError:
    plt = None
if plt is not None:
    xs = np.linspace(-4, 4, 801)
    plt.plot(xs, prox_l1(xs, 1.0), label="soft")
    plt.plot(xs, prox_hard(xs, 1.0), label="hard")
    for g in (0.5, 1.0, 2.0):
        plt.plot(xs, prox_cauchy(xs, g, 1.0), label=f"cauchy gamma={g}")
    plt.legend()
    plt.savefig("prox_curves.png", dpi=120)
