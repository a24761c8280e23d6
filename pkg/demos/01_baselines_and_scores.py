# %% [markdown]
# # Baselines and the normalized cost
#
# A small synthetic district, three fixed controllers, and the five-metric
# cost expressed relative to the rule-based controller (RBC).

# %%
import numpy as np

from district_dsm import ActionLayout, generate_synthetic, noop_policy, random_policy, rbc_policy, run_episode, score

ds = generate_synthetic(n_buildings=9, days=60, seed=1)
layout = ActionLayout.from_dataset(ds)
print(len(ds.buildings), "buildings,", ds.hours, "hours,", len(layout), "storage actions")

# %% [markdown]
# The RBC charges every storage unit by 1/12 of its capacity per hour during
# the night and discharges at the same rate through the day.

# %%
rbc = run_episode(ds, rbc_policy(layout))
noop = run_episode(ds, noop_policy(layout))
rand = run_episode(ds, random_policy(layout, seed=0))

# %%
for name, tr in [("rbc", rbc), ("noop", noop), ("random", rand)]:
    r = score(tr.e_total, rbc.e_total, ds.month_blocks)
    print(f"{name:>6s}", np.round(r.ratio_values, 3), round(r.avg_score, 3))

# %% [markdown]
# Mean daily profile: the RBC moves cooling load into the night hours.

# %%
for name, tr in [("noop", noop), ("rbc", rbc)]:
    print(name, np.round(tr.e_total.reshape(-1, 24).mean(axis=0)).astype(int))

# %% [markdown]
# Storage state of charge over the first two days of building 1.

# %%
print(np.round(rbc.soc_cooling[:48, 0], 2))
