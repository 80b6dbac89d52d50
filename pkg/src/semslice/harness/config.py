"""Experiment configuration: INI-style text, every key optional.

Sections: ``[experiment]``, ``[channel]``, ``[agent]``, ``[reward]``,
``[gan]`` and one ``[slice.K]`` per slice.  Resolved values (including every
default) are echoed into each metrics log via :meth:`ExperimentConfig.to_dict`.
"""
from __future__ import annotations

import configparser
from dataclasses import asdict, dataclass, field, replace
from importlib import resources
from pathlib import Path

import numpy as np

from ..agents.config import AgentConfig
from ..agents.simplex import default_grid_levels
from ..env import ChannelModel, SliceSpec
from ..reward import SEMANTIC, SPECTRAL, RewardWeights
from ..traffic import PROFILES, GanConfig

AGENT_KINDS = ("gan_ddpg_semantic", "ddpg", "dqn", "equal", "proportional")
STANDARD_SLICES = (("URLLC", (8.0, 2.0)), ("eMBB", (2.0, 2.0)), ("mMTC", (2.0, 5.0)),
                ("eMBB", (2.0, 2.0)), ("mMTC", (2.0, 5.0)))
PRESETS = ("standard", "urllc", "embb", "mmtc")


def standard_slices(num_users: int = 10) -> list[SliceSpec]:
    return [SliceSpec(i, t, num_users=num_users, importance_dist=d)
            for i, (t, d) in enumerate(STANDARD_SLICES)]


@dataclass
class ExperimentConfig:
    name: str = "standard"
    slices: list[SliceSpec] = field(default_factory=standard_slices)
    bandwidth: float = 100e6
    channel: ChannelModel = field(default_factory=ChannelModel)
    agent_kind: str = "gan_ddpg_semantic"
    agent: AgentConfig = field(default_factory=AgentConfig)
    reward_weights: RewardWeights | None = None
    episodes: int = 100
    slots_per_episode: int = 50
    eval_slots: int = 1000
    seeds: list[int] = field(default_factory=lambda: [0])
    gan: GanConfig | None = None
    semantic_scheduling: bool | None = None
    semantic_obs: bool | None = None
    reward: str | None = None
    traffic_profile: str = "uniform"
    slot_duration: float = 1.0
    packets_per_user: int = 10
    predictor_slots: int = 200

    def __post_init__(self) -> None:
        if self.bandwidth <= 0:
            raise ValueError("W must be positive")
        if self.eval_slots < 1:
            raise ValueError("eval_slots must be at least 1")
        if not self.seeds:
            raise ValueError("at least one seed is required")
        if self.agent_kind not in AGENT_KINDS:
            raise ValueError(f"agent_kind must be one of {AGENT_KINDS}, got {self.agent_kind!r}")
        if self.traffic_profile not in PROFILES:
            raise ValueError(f"traffic_profile must be one of {PROFILES}")
        if self.reward not in (None, SPECTRAL, SEMANTIC):
            raise ValueError(f"reward must be {SPECTRAL!r} or {SEMANTIC!r}")
        if self.episodes < 0 or self.slots_per_episode < 1:
            raise ValueError("episodes must be >= 0 and slots_per_episode >= 1")
        if sum(s.min_bandwidth for s in self.slices) > self.bandwidth:
            raise ValueError("slice bandwidth floors exceed W")

    @property
    def semantic_arm(self) -> bool:
        return self.agent_kind == "gan_ddpg_semantic"

    def resolved(self) -> "ExperimentConfig":
        """Fill every arm-dependent default explicitly."""
        sem = self.semantic_arm
        weights = self.reward_weights or RewardWeights.default_for(s.slice_type for s in self.slices)
        if weights.beta.size != len(self.slices) or weights.gamma_sem.size != len(self.slices):
            raise ValueError("reward weight vectors must have one entry per slice")
        agent = self.agent
        if self.agent_kind == "dqn" and agent.dqn_grid_levels == 0:
            agent = replace(agent, dqn_grid_levels=default_grid_levels(len(self.slices)))
        return replace(
            self,
            agent=agent,
            reward_weights=weights,
            gan=self.gan or (GanConfig() if sem else None),
            semantic_scheduling=sem if self.semantic_scheduling is None else self.semantic_scheduling,
            semantic_obs=sem if self.semantic_obs is None else self.semantic_obs,
            reward=(SEMANTIC if sem else SPECTRAL) if self.reward is None else self.reward,
        )

    def with_agent(self, kind: str) -> "ExperimentConfig":
        """Same scenario, different arm; arm-dependent switches revert to their defaults."""
        return replace(self, agent_kind=kind, semantic_scheduling=None, semantic_obs=None,
                       reward=None, gan=None if kind != "gan_ddpg_semantic" else self.gan)

    def to_dict(self) -> dict:
        cfg = self.resolved()
        return {
            "name": cfg.name,
            "bandwidth_hz": cfg.bandwidth,
            "agent_kind": cfg.agent_kind,
            "episodes": cfg.episodes,
            "slots_per_episode": cfg.slots_per_episode,
            "eval_slots": cfg.eval_slots,
            "seeds": list(cfg.seeds),
            "semantic_scheduling": cfg.semantic_scheduling,
            "semantic_obs": cfg.semantic_obs,
            "reward": cfg.reward,
            "traffic_profile": cfg.traffic_profile,
            "slot_duration": cfg.slot_duration,
            "packets_per_user": cfg.packets_per_user,
            "predictor_slots": cfg.predictor_slots,
            "channel": {**asdict(cfg.channel), "snr_db_range": list(cfg.channel.snr_db_range)},
            "agent": asdict(cfg.agent),
            "reward_weights": {"alpha": cfg.reward_weights.alpha,
                               "beta": cfg.reward_weights.beta.tolist(),
                               "gamma_sem": cfg.reward_weights.gamma_sem.tolist()},
            "gan": None if cfg.gan is None else asdict(cfg.gan),
            "slices": [{**asdict(s), "importance_dist": list(s.importance_dist)} for s in cfg.slices],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        ch = dict(d["channel"])
        ch["snr_db_range"] = tuple(ch["snr_db_range"])
        rw = d.get("reward_weights")
        return cls(
            name=d["name"],
            slices=[SliceSpec(**{**s, "importance_dist": tuple(s["importance_dist"])}) for s in d["slices"]],
            bandwidth=d["bandwidth_hz"],
            channel=ChannelModel(**ch),
            agent_kind=d["agent_kind"],
            agent=AgentConfig(**d["agent"]),
            reward_weights=None if rw is None else RewardWeights(rw["alpha"], rw["beta"], rw["gamma_sem"]),
            episodes=d["episodes"],
            slots_per_episode=d["slots_per_episode"],
            eval_slots=d["eval_slots"],
            seeds=list(d["seeds"]),
            gan=None if d.get("gan") is None else GanConfig(**d["gan"]),
            semantic_scheduling=d.get("semantic_scheduling"),
            semantic_obs=d.get("semantic_obs"),
            reward=d.get("reward"),
            traffic_profile=d["traffic_profile"],
            slot_duration=d["slot_duration"],
            packets_per_user=d["packets_per_user"],
            predictor_slots=d["predictor_slots"],
        )


# ---------------------------------------------------------------------------
# text format

def _floats(text: str) -> list[float]:
    return [float(v) for v in text.replace(";", ",").split(",") if v.strip()]


def _ints(text: str) -> list[int]:
    return [int(float(v)) for v in text.replace(";", ",").split(",") if v.strip()]


def _bool_or_auto(text: str) -> bool | None:
    t = text.strip().lower()
    if t == "auto":
        return None
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"expected true/false/auto, got {text!r}")


def _apply(obj, section: configparser.SectionProxy, casts: dict, renames: dict | None = None):
    renames = renames or {}
    kwargs = {}
    for key, raw in section.items():
        attr = renames.get(key, key)
        if attr not in casts:
            raise ValueError(f"unknown key {key!r} in section [{section.name}]")
        kwargs[attr] = casts[attr](raw)
    return replace(obj, **kwargs) if kwargs else obj


_AGENT_CASTS = {
    "gamma": float, "tau": float, "lr_actor": float, "lr_critic": float, "noise_std": float,
    "noise_decay": float, "noise_min": float, "batch_size": int, "warmup_steps": int,
    "buffer_capacity": int, "hidden": _ints, "dqn_grid_levels": int, "dqn_lr": float,
    "dqn_target_period": int, "zero_init_actor": _bool_or_auto, "epsilon_start": float, "epsilon_end": float, "epsilon_decay": float,
}
_GAN_CASTS = {
    "latent_dim": int, "generator_layers": _ints, "discriminator_layers": _ints, "batch_size": int,
    "lr_g": float, "lr_d": float, "steps_d_per_g": int, "train_steps": int, "demand_max": float,
}
_CHANNEL_CASTS = {
    "mode": str.strip, "gain": float, "tx_power": float, "noise_density": float,
    "obs_noise_std": float, "snr_db_low": float, "snr_db_high": float,
}


def parse_config(text: str) -> ExperimentConfig:
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    cp.read_string(text)
    known = {"experiment", "channel", "agent", "reward", "gan"}
    for sec in cp.sections():
        if sec not in known and not sec.startswith("slice."):
            raise ValueError(f"unknown section [{sec}]")

    kwargs: dict = {}
    if cp.has_section("experiment"):
        casts = {
            "name": str.strip, "bandwidth_hz": float, "agent_kind": str.strip, "episodes": int,
            "slots_per_episode": int, "eval_slots": int, "seeds": _ints,
            "semantic_scheduling": _bool_or_auto, "semantic_obs": _bool_or_auto,
            "reward": lambda v: None if v.strip() == "auto" else v.strip(),
            "traffic_profile": str.strip, "slot_duration": float, "packets_per_user": int,
            "predictor_slots": int,
        }
        for key, raw in cp["experiment"].items():
            if key not in casts:
                raise ValueError(f"unknown key {key!r} in section [experiment]")
            kwargs["bandwidth" if key == "bandwidth_hz" else key] = casts[key](raw)

    slice_secs = sorted((s for s in cp.sections() if s.startswith("slice.")),
                        key=lambda s: int(s.split(".", 1)[1]))
    if slice_secs:
        slices = []
        for i, sec in enumerate(slice_secs):
            s = cp[sec]
            allowed = {"type", "users", "deadline", "importance_alpha", "importance_beta",
                       "min_bandwidth_hz"}
            extra = set(s.keys()) - allowed
            if extra:
                raise ValueError(f"unknown keys {sorted(extra)} in section [{sec}]")
            stype = s.get("type", "eMBB").strip()
            slices.append(SliceSpec(
                i, stype, num_users=int(s.get("users", "10")),
                deadline=int(s["deadline"]) if "deadline" in s else None,
                importance_dist=(float(s.get("importance_alpha", "2")), float(s.get("importance_beta", "2"))),
                min_bandwidth=float(s.get("min_bandwidth_hz", "0"))))
        kwargs["slices"] = slices

    if cp.has_section("channel"):
        sec = cp["channel"]
        vals = {k: _CHANNEL_CASTS[k](v) if k in _CHANNEL_CASTS else None for k, v in sec.items()}
        unknown = [k for k in sec.keys() if k not in _CHANNEL_CASTS]
        if unknown:
            raise ValueError(f"unknown keys {unknown} in section [channel]")
        lo = vals.pop("snr_db_low", 5.0)
        hi = vals.pop("snr_db_high", 30.0)
        kwargs["channel"] = ChannelModel(snr_db_range=(lo, hi), **vals)

    if cp.has_section("agent"):
        kwargs["agent"] = _apply(AgentConfig(), cp["agent"], _AGENT_CASTS)
    if cp.has_section("gan"):
        kwargs["gan"] = _apply(GanConfig(), cp["gan"], _GAN_CASTS)
    if cp.has_section("reward"):
        sec = cp["reward"]
        unknown = [k for k in sec.keys() if k not in ("alpha", "beta", "gamma_sem")]
        if unknown:
            raise ValueError(f"unknown keys {unknown} in section [reward]")
        n = len(kwargs.get("slices", STANDARD_SLICES))
        types = [s.slice_type for s in kwargs["slices"]] if "slices" in kwargs else [t for t, _ in STANDARD_SLICES]
        base = RewardWeights.default_for(types)

        def vec(key, default):
            if key not in sec:
                return default
            v = _floats(sec[key])
            return np.full(n, v[0]) if len(v) == 1 else np.array(v)

        kwargs["reward_weights"] = RewardWeights(float(sec.get("alpha", "1")),
                                                 vec("beta", base.beta), vec("gamma_sem", base.gamma_sem))
    return ExperimentConfig(**kwargs)


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    if not path.exists() and str(path) in PRESETS:
        return load_preset(str(path))
    try:
        text = path.read_text()
    except FileNotFoundError as exc:
        raise FileNotFoundError(exc.errno, f"no config file {str(path)!r} and no preset of that name "
                                           f"(presets: {', '.join(PRESETS)})") from exc
    return parse_config(text)


def load_preset(name: str) -> ExperimentConfig:
    if name not in PRESETS:
        raise ValueError(f"unknown preset {name!r}; choose from {PRESETS}")
    text = resources.files("semslice").joinpath("configs", f"{name}.cfg").read_text()
    return parse_config(text)


def preset_path(name: str) -> Path:
    return Path(str(resources.files("semslice").joinpath("configs", f"{name}.cfg")))
