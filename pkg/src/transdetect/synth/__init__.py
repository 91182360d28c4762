"""Transition synthesis: effect catalog, plan sampling and splicing."""
from .effects import CATALOG, easing, family, render_transition
from .engine import (
    DEFAULT_CAP,
    EffectSpec,
    SynthPlan,
    compute_tmax,
    progress,
    sample_plan,
    splitmix64,
    synthesize,
    transition_seed,
)
from .shots import procedural_shot, procedural_shots

__all__ = [
    "CATALOG",
    "DEFAULT_CAP",
    "EffectSpec",
    "SynthPlan",
    "compute_tmax",
    "easing",
    "family",
    "procedural_shot",
    "procedural_shots",
    "progress",
    "render_transition",
    "sample_plan",
    "splitmix64",
    "synthesize",
    "transition_seed",
]
