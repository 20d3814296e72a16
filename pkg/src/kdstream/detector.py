"""Per-concept two-window drift detector based on squared-MMD scores."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

from .kernels import KernelConfig, mmd_squared
from .windows import WindowStore

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class DetectorConfig:
    tau: float = 0.04
    m: int = 70              # most recent examples per window entering the statistic
    min_samples: int = 30    # concepts with smaller windows are skipped
    stride: int = 1

    def __post_init__(self):
        if self.tau < 0:
            raise ValueError(f"tau must be >= 0, got {self.tau}")
        if self.m < 2:
            raise ValueError(f"m must be >= 2, got {self.m}")


@dataclass
class DetectionResult:
    flagged: set[str] = field(default_factory=set)
    scores: dict[str, float] = field(default_factory=dict)


def detect(store: WindowStore, kcfg: KernelConfig, dcfg: DetectorConfig) -> DetectionResult:
    """Score every concept whose windows are large enough; flag scores >= tau.

    The statistic is the biased squared-MMD estimate between the m most
    recent points of the current and past windows.
    """
    result = DetectionResult()
    for c, pair in store.pairs.items():
        if len(pair.w_cur) < dcfg.min_samples or len(pair.w_old) < dcfg.min_samples:
            log.debug("detector skipping %s: windows %d/%d below min_samples",
                      c, len(pair.w_cur), len(pair.w_old))
            result.scores[c] = 0.0
            continue
        score = mmd_squared(pair.w_cur[-dcfg.m:], pair.w_old[-dcfg.m:], kcfg)
        result.scores[c] = score
        if score >= dcfg.tau:
            result.flagged.add(c)
    return result
