# %% [markdown]
# # Stepping the environment by hand
#
# The functional `step` takes a state and returns a new one, so it is easy
# to try an action, look at the outcome and throw it away.

# %%
import numpy as np

from district_dsm import env
from district_dsm.data import generate_synthetic
from district_dsm.reward import reward

ds = generate_synthetic(3, 7, seed=4)
state, obs = env.reset(ds)
print(env.observation_names(ds))
print(obs)

# %% [markdown]
# Try full charge, idle and full discharge from the same state at 22:00.

# %%
state22 = env.DistrictState(t=21, soc_cooling=state.soc_cooling, soc_dhw=state.soc_dhw)
n = len(env.ActionLayout.from_dataset(ds))
for a in (1.0, 0.0, -1.0):
    _, out = env.step(state22, np.full(n, a), ds)
    r = reward(out.e_total, out.e_buildings, env.hour_of(21), np.full(n, a))
    print(f"action {a:+.0f}: district {out.e_total:7.1f} kWh, reward {r:+.4f}")

# %% [markdown]
# COP falls as the outdoor temperature rises, which makes cooling stored at
# night cheaper than cooling produced in the afternoon.

# %%
for t in (15, 25, 35):
    print(t, round(env.cop(t), 3))
