"""District demand-side management workbench.

Building/weather datasets, a thermal-storage district simulator, the
RBC-normalized five-metric cost, an hour-of-day rule-based baseline, the
shaped reward, and a numpy Soft Actor-Critic agent.
"""

from .baseline import RbcSchedule, noop_policy, random_policy, rbc_policy
from .data import Dataset, generate_synthetic, load_dataset, save_dataset
from .env import ActionLayout, DistrictEnv, EnvConfig, run_episode
from .metrics import CostReport, components, score, write_score_table
from .reward import RewardConfig, reward
from .sac import SacAgent, SacConfig, deploy, train

__version__ = "0.1.0"
