"""Synthetic cohort generator for exercising the analysis pipeline.

Generates records shaped like the clinical protocol: a control group
trained with the manual method and an experimental group trained with
the game, a fixed number of sessions per child, one graded round per
session.  Children get a latent per-child ability on a logistic scale
that improves a little each session; wrong attempts per target are
geometric in the miss probability, and round times are lognormal with
method-specific medians.

The distributions are synthetic stand-ins chosen so the experimental
group is faster and scores higher in expectation; every parameter can
be overridden through :class:`StudyConfig`.  Everything is a pure
function of the config plus one seed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping

import numpy as np

from .game import SESSIONS_PER_PLAYER, TrialRecord, grade_trial
from .store import LogHeader, SessionStore

__all__ = [
    "InvalidCohortSpec",
    "StudyConfig",
    "simulate_study",
    "write_study",
]


class InvalidCohortSpec(ValueError):
    """Raised for cohort parameters the protocol cannot use."""


@dataclass(frozen=True)
class StudyConfig:
    """Cohort shape and sampling distributions for one synthetic study."""

    group_size: int = 20
    sessions_per_child: int = 4
    pairs_per_round: int = 6
    # Lognormal round times: median seconds and log-scale spread.
    manual_time_median_s: float = 288.0
    manual_time_sigma: float = 0.18
    sg_time_median_s: float = 216.0
    sg_time_sigma: float = 0.22
    # Latent ability on the logit scale; success odds per attempt.
    manual_ability_mean: float = 0.8
    sg_ability_mean: float = 1.9
    ability_sd: float = 0.7
    per_session_gain: float = 0.25
    # Cohort demographics, recorded in session log headers.
    age_mean_years: float = 8.4
    age_sd_years: float = 0.84

    def __post_init__(self) -> None:
        if self.group_size < 1:
            raise InvalidCohortSpec("group_size must be at least 1")
        if not 1 <= self.sessions_per_child <= SESSIONS_PER_PLAYER:
            raise InvalidCohortSpec(
                f"sessions_per_child must be in 1..{SESSIONS_PER_PLAYER}"
            )
        if self.pairs_per_round < 1:
            raise InvalidCohortSpec("pairs_per_round must be at least 1")
        for name in (
            "manual_time_median_s",
            "manual_time_sigma",
            "sg_time_median_s",
            "sg_time_sigma",
            "ability_sd",
            "age_sd_years",
        ):
            if getattr(self, name) <= 0:
                raise InvalidCohortSpec(f"{name} must be positive")

    def to_dict(self) -> dict:
        return {
            "group_size": self.group_size,
            "sessions_per_child": self.sessions_per_child,
            "pairs_per_round": self.pairs_per_round,
            "manual_time_median_s": self.manual_time_median_s,
            "manual_time_sigma": self.manual_time_sigma,
            "sg_time_median_s": self.sg_time_median_s,
            "sg_time_sigma": self.sg_time_sigma,
            "manual_ability_mean": self.manual_ability_mean,
            "sg_ability_mean": self.sg_ability_mean,
            "ability_sd": self.ability_sd,
            "per_session_gain": self.per_session_gain,
            "age_mean_years": self.age_mean_years,
            "age_sd_years": self.age_sd_years,
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> "StudyConfig":
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(data) - known
        if unknown:
            raise InvalidCohortSpec(f"unknown config keys: {sorted(unknown)}")
        return cls(**{k: v for k, v in data.items()})


_GROUPS = (("CG", "Manual"), ("EG", "SG"))


def _sigmoid(x: float) -> float:
    return 1.0 / (1.0 + math.exp(-x))


@dataclass(frozen=True)
class _Child:
    player_id: str
    group: str
    method: str
    ability: float
    age_years: float


def _sample_children(config: StudyConfig, rng: np.random.Generator) -> list[_Child]:
    children = []
    for group, method in _GROUPS:
        mean = (
            config.manual_ability_mean if method == "Manual" else config.sg_ability_mean
        )
        for i in range(config.group_size):
            children.append(
                _Child(
                    player_id=f"{group.lower()}{i + 1:02d}",
                    group=group,
                    method=method,
                    ability=float(rng.normal(mean, config.ability_sd)),
                    age_years=float(rng.normal(config.age_mean_years, config.age_sd_years)),
                )
            )
    return children


def _simulate_round(
    child: _Child, session: int, config: StudyConfig, rng: np.random.Generator
) -> TrialRecord:
    ability = child.ability + config.per_session_gain * (session - 1)
    p_hit = min(max(_sigmoid(ability), 0.05), 0.995)
    # Each target is retried until matched, so successes always equal
    # the pair count; failures are the extra attempts along the way.
    failures = int(np.sum(rng.geometric(p_hit, size=config.pairs_per_round) - 1))
    successes = config.pairs_per_round

    if child.method == "Manual":
        median, sigma = config.manual_time_median_s, config.manual_time_sigma
    else:
        median, sigma = config.sg_time_median_s, config.sg_time_sigma
    # Mild practice effect plus a small per-failure time cost.
    practice = 1.0 - 0.03 * (session - 1)
    elapsed = float(rng.lognormal(math.log(median * practice), sigma))
    elapsed += 4.0 * failures

    return TrialRecord(
        player_id=child.player_id,
        group=child.group,
        session_index=session,
        method=child.method,
        elapsed_s=elapsed,
        successes=successes,
        failures=failures,
        grade=grade_trial(successes, failures),
        complete=True,
    )


def simulate_study(config: StudyConfig, rng_seed: int) -> list[TrialRecord]:
    """Generate the full cohort's records, deterministic per seed."""
    rng = np.random.default_rng(rng_seed)
    children = _sample_children(config, rng)
    records = []
    for child in children:
        for session in range(1, config.sessions_per_child + 1):
            records.append(_simulate_round(child, session, config, rng))
    return records


def write_study(
    data_dir, config: StudyConfig, rng_seed: int, *, overwrite: bool = False
) -> int:
    """Simulate a cohort and persist it as session logs.

    One log per child per session; the header config snapshot carries
    the child's sampled age and the study parameters.  Returns the
    number of records written.
    """
    rng = np.random.default_rng(rng_seed)
    children = _sample_children(config, rng)
    store = SessionStore(data_dir)
    written = 0
    for child in children:
        for session in range(1, config.sessions_per_child + 1):
            record = _simulate_round(child, session, config, rng)
            header = LogHeader(
                player_id=child.player_id,
                group=child.group,
                method=child.method,
                session_index=session,
                started_at_epoch_s=0.0,
                config={
                    "age_years": round(child.age_years, 2),
                    "study": config.to_dict(),
                    "rng_seed": rng_seed,
                },
            )
            with store.open_writer(header, overwrite=overwrite) as writer:
                writer.append_record(record)
            written += 1
    return written
