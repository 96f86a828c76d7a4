"""Built-in value profiles.

Nine-participant sets ship as CSV files. Thirty-participant sets come from
deterministic generators; most reproduce the reference optimal welfare values,
while ``crra30`` is a qualitative stand-in (see ``generate_30_profiles``).
"""

from __future__ import annotations

from importlib import resources

import numpy as np

from .core import RoscaInstance, parse_csv_instance

BUILTIN_9 = (
    "crra9",
    "pointmass9",
    "unif_dec9",
    "unif_inc9",
    "pareto_dec9",
    "pareto_inc9",
    "unim_dec9",
    "unim_inc9",
)

FAMILIES_30 = (
    "pointmass30",
    "unif_dec30",
    "unif_inc30",
    "pareto_dec30",
    "pareto_inc30",
    "unim_dec30",
    "unim_inc30",
    "crra30",
)

# Distributional families in table order, keyed by the short display name.
DIST_FAMILIES = ("pointmass", "unif_dec", "unif_inc", "pareto_dec", "pareto_inc", "unim_dec", "unim_inc")


def builtin_text(name: str) -> str:
    if name not in BUILTIN_9:
        raise KeyError(f"unknown built-in profile {name!r}; choose from {BUILTIN_9}")
    return resources.files("roscalab.data").joinpath(f"{name}.csv").read_text()


def load_builtin(name: str) -> RoscaInstance:
    if name in FAMILIES_30 or name == "pareto30":
        return generate_30_profiles(name)
    return parse_csv_instance(builtin_text(name))


def cutoff_profiles(levels, cutoffs, n: int) -> np.ndarray:
    """Row k holds ``levels[k]`` in rounds before ``cutoffs[k]`` and 0 afterwards."""
    v = np.zeros((len(levels), n))
    for k, (level, c) in enumerate(zip(levels, cutoffs)):
        v[k, : int(c)] = level
    return v


def _unimodal_levels() -> np.ndarray:
    # Seven levels with binomial-like multiplicities summing to 30 participants.
    counts = (1, 3, 6, 10, 6, 3, 1)
    levels = [(4.0 / 3.0) * (1 + 3 * k) for k in range(7)]
    return np.repeat(levels, counts)


def generate_30_profiles(family: str) -> RoscaInstance:
    """Deterministic 30-participant value profiles.

    Participant ``k`` (1-based) has cutoff round ``k`` in the ``-dec`` families,
    with values decreasing in ``k``. The ``-inc`` families give participant 1
    nothing and participant ``k`` a cutoff at ``k - 1`` with values increasing
    in ``k``.
    """
    n = 30
    ks = np.arange(1, n + 1)
    if family == "pointmass30":
        v = cutoff_profiles([4.0] * n, ks - 1, n)
    elif family == "unif_dec30":
        v = cutoff_profiles(n + 1 - ks, ks, n)
    elif family == "unif_inc30":
        v = cutoff_profiles(ks - 1, ks, n)
    elif family in ("pareto_dec30", "pareto30"):
        v = cutoff_profiles(100.0 / ks, ks, n)
    elif family == "pareto_inc30":
        levels = np.concatenate([[0.0], 100.0 / (n + 1 - ks[1:])])
        v = cutoff_profiles(levels, ks - 1, n)
    elif family == "unim_dec30":
        v = cutoff_profiles(np.sort(_unimodal_levels())[::-1], ks, n)
    elif family == "unim_inc30":
        levels = np.concatenate([[0.0], np.sort(_unimodal_levels())[1:]])
        v = cutoff_profiles(levels, ks - 1, n)
    elif family == "crra30":
        v = _crra30()
    else:
        raise KeyError(f"unknown 30-participant family {family!r}; choose from {FAMILIES_30}")
    return RoscaInstance(v)


def _crra30() -> np.ndarray:
    """Twenty cutoff participants and ten roughly linear ones.

    Cutoff levels are 2, 5, ..., 29 (mean 15.5), each used once with a short
    and once with a long cutoff. The linear participants are staircases
    descending from 29 towards 0 with step widths 1..10; their mean value is
    about 17, which brings OPT (561.2) and the random-allocation ratio (1.564)
    close to the reference targets 551 and 1.580.
    """
    n = 30
    levels = [2.0 + 3 * m for m in range(10)]
    rows = []
    for m, level in enumerate(levels):
        rows.append(cutoff_profiles([level], [2 * m + 1], n)[0])
        rows.append(cutoff_profiles([level], [2 * m + 11], n)[0])
    t = np.arange(n)
    for width in range(1, 11):
        rows.append(29.0 * (1.0 - width * (t // width) / n))
    return np.array(rows)
