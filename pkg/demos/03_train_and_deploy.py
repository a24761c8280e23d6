# %% [markdown]
# # Train a SAC agent and deploy it on other climates
#
# A deliberately short run (a few minutes on one core): 2 episodes on a
# 30-day district, then deployment on three other synthetic climate zones
# with the evaluation hyperparameters.

# %%
import numpy as np

from district_dsm import SacConfig, deploy, generate_synthetic, train
from district_dsm.metrics import write_score_table

zones = {c: generate_synthetic(3, 30, seed=10 + int(c), climate=c) for c in "1234"}
cfg = SacConfig(gradient_updates_per_interval=56)

# %%
res = train(zones["1"], sac_config=cfg, episodes=2, seed=1)
print("reward sums", np.round(res.reward_sums, 1))
print("scores", [round(r.avg_score, 4) for r in res.reports])

# %%
rows = []
for c, ds in zones.items():
    _, reports = deploy(res.agent, ds, eval_config=SacConfig.evaluation(), episodes=1, seed=1)
    rows.append((c, reports[-1]))
    print(c, round(reports[-1].avg_score, 4))
write_score_table("scores_demo.csv", rows)
