"""End-to-end orchestration of the detect / disambiguate / adapt loop for the
main method and all baseline variants, plus metrics and tuning."""
from __future__ import annotations

import dataclasses
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .adaptation import adapt, forget_adapt
from .detector import DetectionResult, DetectorConfig, detect
from .disambiguation import (DriftDescription, KdEdit, OracleUser,
                             build_description, llr_disambiguate,
                             merge_user_edits, LlrConfig)
from .hierarchy import ConceptHierarchy, LabelVector
from .kernels import KernelConfig, median_heuristic_bandwidth
from .streams import (DriftSchedule, GroundTruth, HstaggerConfig, apply_schedule,
                      build_schedule, hstagger_generate, load_dataset, next_example,
                      Dataset)
from .windows import ClassifierConfig, Example, WindowStore, init_windows

log = logging.getLogger(__name__)

METHODS = ("trckd_interactive", "trckd_oracle", "trckd_forget", "trckd_ni",
           "trckd_llr", "mw_knn", "knn_1window", "knn_static")


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    method: str = "trckd_interactive"
    dataset: str | None = None                 # CSV path; None -> synthetic generator
    schedule: list[dict] = field(default_factory=list)
    w: int = 200
    k: int = 3
    tau: float = 0.04
    m_mmd: int = 70
    min_samples: int = 30
    cooldown: int = 70
    m_witness: int = 5
    neg_fraction: float = 2 / 3
    holdout_size: int = 64
    s1_size: int = 200
    stream_length: int = 370
    eval_seeds: list[int] = field(default_factory=lambda: list(range(8)))
    tuning_seeds: list[int] = field(default_factory=lambda: [100, 101])
    relabel_holdout: bool = True
    llr_beta: float = float("inf")
    user: str = "confirm"                      # scripted user for interactive runs
    pos_ratio_band: tuple[float, float] = (0.25, 0.75)

    def __post_init__(self):
        if self.method not in METHODS:
            raise ConfigError(f"unknown method {self.method!r}; expected one of {METHODS}")
        if min(self.w, self.k, self.holdout_size, self.s1_size, self.stream_length) < 1:
            raise ConfigError("sizes must be positive")
        if set(self.eval_seeds) & set(self.tuning_seeds):
            raise ConfigError("tuning and evaluation seeds must be disjoint")

    def to_json(self) -> dict:
        out = dataclasses.asdict(self)
        out["llr_beta"] = "inf" if np.isinf(self.llr_beta) else self.llr_beta
        out["pos_ratio_band"] = list(self.pos_ratio_band)
        return out

    @staticmethod
    def from_json(payload: dict) -> "RunConfig":
        payload = dict(payload)
        if payload.get("llr_beta") == "inf":
            payload["llr_beta"] = float("inf")
        if "pos_ratio_band" in payload:
            payload["pos_ratio_band"] = tuple(payload["pos_ratio_band"])
        known = {f.name for f in dataclasses.fields(RunConfig)}
        unknown = set(payload) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        return RunConfig(**payload)


@dataclass
class MetricRecord:
    seed: int
    t: int
    micro_f1: float
    flagged: list[str]
    interactions: int
    hierarchy_version: int

    def to_json(self) -> dict:
        return dataclasses.asdict(self)


def micro_f1(preds: list[LabelVector], truths: list[LabelVector]) -> float:
    """Globally pooled F1: 2*TP / (true positives + predicted positives)."""
    if len(preds) != len(truths):
        raise ValueError(f"length mismatch: {len(preds)} vs {len(truths)}")
    tp = true_pos = pred_pos = 0
    for p, y in zip(preds, truths):
        if set(p) != set(y):
            raise ValueError("prediction and truth concept sets differ")
        for c, v in y.items():
            pv = p[c]
            tp += v & pv
            true_pos += v
            pred_pos += pv
    denom = true_pos + pred_pos
    return 1.0 if denom == 0 else 2.0 * tp / denom


def _aligned(preds: list[LabelVector], truths: list[LabelVector]) -> float:
    """micro_f1 over the union of concept universes, padding absences with 0."""
    universe = set()
    for v in preds + truths:
        universe |= set(v)
    pad = lambda v: {c: v.get(c, 0) for c in universe}
    return micro_f1([pad(p) for p in preds], [pad(y) for y in truths])


def scripted_user(name: str):
    """Built-in user simulators for headless interactive runs."""
    if name == "confirm":
        return lambda engine, desc: ([], set())
    if name == "deselect_all":
        return lambda engine, desc: ([], set(desc.flagged))
    if name == "perfect":
        return lambda engine, desc: (engine.oracle.answer(desc), set(desc.flagged))
    raise ConfigError(f"unknown scripted user {name!r}")


class Engine:
    """One stream run for one (config, seed); bit-reproducible.

    The loop is sequential: each step receives an example, updates windows,
    runs the variant's detection/disambiguation/adaptation, and records the
    holdout micro-F1. Interactive runs with no user callback pause on an open
    question until ``answer`` is called.
    """

    def __init__(self, cfg: RunConfig, seed: int, user=None):
        self.cfg = cfg
        self.seed = seed
        self.user = user
        if user is None and cfg.method == "trckd_interactive" and cfg.user != "pause":
            self.user = scripted_user(cfg.user)

        self.hs_cfg = HstaggerConfig(seed=seed, pos_ratio_band=cfg.pos_ratio_band)
        if cfg.dataset:
            examples, h, _ = load_dataset(cfg.dataset)
            ds = Dataset(np.asarray([e.x for e in examples], dtype=float),
                         [dict(e.y) for e in examples])
            self.gt = GroundTruth(h, {}, [], dataset=ds)
        else:
            self.gt = hstagger_generate(self.hs_cfg)
        self.schedule = build_schedule(self.gt, cfg.schedule, seed, self.hs_cfg)
        self.oracle = OracleUser(self.gt.event_log)

        # Initial data, bandwidth, windows, machine hierarchy.
        self.s1 = [self._example(t) for t in range(-cfg.s1_size, 0)]
        self.machine_h = self.gt.hierarchy
        self.version = 0
        self.kcfg = KernelConfig(median_heuristic_bandwidth([z.x for z in self.s1]))
        self.dcfg = DetectorConfig(cfg.tau, cfg.m_mmd, cfg.min_samples)
        self.ccfg = ClassifierConfig(cfg.k)
        class_aware = cfg.method != "knn_1window"
        self.store = init_windows(self.s1, self.machine_h, cfg.w, cfg.neg_fraction,
                                  class_aware=class_aware, recent_size=cfg.m_mmd)
        if cfg.method == "knn_1window":
            # single sliding window: predictions read the always-updated side
            for pair in self.store.pairs.values():
                pair.w_cur, pair.w_old = pair.w_old, []

        rng = np.random.default_rng([seed, 777])
        self.holdout_idx = [int(i) for i in
                            rng.choice(self.gt.n_instances(),
                                       size=min(cfg.holdout_size, self.gt.n_instances()),
                                       replace=False)]
        self.holdout_X = np.asarray([self.gt.features_of(i) for i in self.holdout_idx])
        self.holdout_y = [self.gt.label_of(i) for i in self.holdout_idx]

        self.t = 0
        self.interactions = 0
        self._quiet_until: dict[str, int] = {}
        self._question_quiet_until = -1
        self._last_flagged: list[str] = []
        self.pending: DriftDescription | None = None
        self.records: list[MetricRecord] = []
        self.events: list[dict] = []
        self._emit({"type": "init", "seed": seed, "method": cfg.method,
                    "hierarchy": self.machine_h.to_json(),
                    "bandwidth": self.kcfg.bandwidth})

    # -- plumbing --------------------------------------------------------------

    def _example(self, t: int) -> Example:
        return next_example(self.gt, t, self.seed)

    def _emit(self, event: dict):
        event["cursor"] = len(self.events)
        self.events.append(event)

    def _relabel_holdout(self):
        if self.cfg.relabel_holdout:
            self.holdout_y = [self.gt.label_of(i) for i in self.holdout_idx]

    def _track_new_concepts(self, z: Example):
        for c in z.y:
            if c not in self.machine_h.concepts:
                self.machine_h = self.machine_h.add_concept(c, {self.machine_h.root})
                self.store.track(c)
                self.version += 1

    @property
    def finished(self) -> bool:
        return self.t >= self.cfg.stream_length and self.pending is None

    @property
    def awaiting_answer(self) -> bool:
        return self.pending is not None

    # -- main loop ---------------------------------------------------------------

    def step(self):
        """Run one iteration; may leave the engine paused on an open question."""
        if self.awaiting_answer:
            raise RuntimeError("cannot step while a question is open")
        if self.finished:
            raise RuntimeError("run already finished")
        t = self.t + 1
        applied = apply_schedule(self.gt, self.schedule, t)
        if applied:
            self._relabel_holdout()
        z = self._example(t)
        self._track_new_concepts(z)
        if self.cfg.method != "knn_static":
            self.store.push(z)
        self._last_flagged = []
        self._variant_step(t, applied)
        if self.pending is None:
            self._finish_iteration(t)

    def _variant_step(self, t: int, applied):
        method = self.cfg.method
        if method in ("knn_static", "knn_1window"):
            return
        if method == "trckd_oracle":
            if applied:
                edits = self.oracle.answer_at(t)
                self._adapt(t, edits)
            return
        if method == "trckd_forget":
            if applied:
                affected = set()
                for ev in applied:
                    affected |= ev.edit.touches()
                forget_adapt(self.store, affected)
                self._emit({"type": "adaptation", "t": t, "report": {
                    "applied": [], "forgotten": sorted(affected)}})
            return

        if method == "trckd_interactive" and t < self._question_quiet_until:
            # questions are rate limited; a detection now could not be asked
            # about, so skip the test entirely
            self._last_flagged = []
            return
        det = detect(self.store, self.kcfg, self.dcfg)
        # concepts whose windows were just rewritten by an adaptation are
        # still settling; re-testing them before refill re-fires on the same
        # drift event
        det.flagged = {c for c in det.flagged if t >= self._quiet_until.get(c, t)}
        self._last_flagged = sorted(det.flagged)
        if det.flagged:
            self._emit({"type": "detection", "t": t, "flagged": sorted(det.flagged),
                        "scores": {c: det.scores[c] for c in sorted(det.flagged)}})
        else:
            return
        if method == "mw_knn":
            forget_adapt(self.store, det.flagged)
            self._quiet(t, det.flagged)
            self._emit({"type": "adaptation", "t": t, "report": {
                "applied": [], "forgotten": sorted(det.flagged)}})
        elif method == "trckd_ni":
            self._adapt(t, [KdEdit.drift(c) for c in sorted(det.flagged)])
        elif method == "trckd_llr":
            desc = build_description(det, self.store, self.kcfg, self.cfg.m_witness, t)
            edits = llr_disambiguate(desc, self.store, self.machine_h,
                                     LlrConfig(self.cfg.llr_beta))
            self._adapt(t, edits)
        elif method == "trckd_interactive":
            desc = build_description(det, self.store, self.kcfg, self.cfg.m_witness, t)
            self.interactions += 1
            self._question_quiet_until = t + self.cfg.cooldown
            if self.user is not None:
                edits, deselected = self.user(self, desc)
                merged = merge_user_edits(desc, edits, set(deselected), self.machine_h)
                self._adapt(t, merged)
                self._quiet(t, desc.flagged)
            else:
                self.pending = desc
                self._emit({"type": "question", "t": t, "description": desc.to_json()})

    def _quiet(self, t: int, concepts) -> None:
        until = t + self.cfg.cooldown
        for c in concepts:
            self._quiet_until[c] = max(self._quiet_until.get(c, 0), until)

    def _adapt(self, t: int, edits: list[KdEdit]):
        if not edits:
            return
        self.machine_h, report = adapt(self.store, self.machine_h, edits, self.version)
        self.version = report.hierarchy_version
        touched = set()
        for e in edits:
            touched |= e.touches()
        self._quiet(t, touched)
        self._emit({"type": "adaptation", "t": t, "report": report.to_json()})

    def answer(self, edits: list[KdEdit], deselected: set[str]):
        """Resolve the open question and resume the stream."""
        if self.pending is None:
            raise RuntimeError("no open question")
        desc = self.pending
        merged = merge_user_edits(desc, edits, set(deselected), self.machine_h)
        self._adapt(desc.iteration, merged)
        self._quiet(desc.iteration, desc.flagged)
        self.pending = None
        self._emit({"type": "answer", "t": desc.iteration,
                    "edits": [e.to_json() for e in merged]})
        self._finish_iteration(desc.iteration)

    def _finish_iteration(self, t: int):
        preds = self.store.predict_batch(self.holdout_X, self.machine_h, self.ccfg)
        # The root label is 1 for every example on both sides by construction,
        # so it carries no information; scoring it would only dilute the metric.
        root = self.machine_h.root
        f1 = _aligned([{c: v for c, v in p.items() if c != root} for p in preds],
                      [{c: v for c, v in y.items() if c != root} for y in self.holdout_y])
        rec = MetricRecord(self.seed, t, f1, list(self._last_flagged),
                           self.interactions, self.version)
        self.records.append(rec)
        self._emit({"type": "metric", "t": t, "micro_f1": f1,
                    "interactions": self.interactions})
        self.t = t
        if self.finished:
            self._emit({"type": "finished", "t": t})

    def run_to_completion(self) -> list[MetricRecord]:
        while not self.finished:
            self.step()
        return self.records


def run_seed(cfg: RunConfig, seed: int, user=None) -> Engine:
    engine = Engine(cfg, seed, user=user)
    engine.run_to_completion()
    return engine


def run(cfg: RunConfig) -> dict[int, list[MetricRecord]]:
    """Execute the configured run on every evaluation seed."""
    return {seed: run_seed(cfg, seed).records for seed in cfg.eval_seeds}


def mean_final_third(records: list[MetricRecord]) -> float:
    tail = records[-(len(records) // 3):] if records else []
    return float(np.mean([r.micro_f1 for r in tail])) if tail else 0.0


def tune(cfg: RunConfig, grid: list[dict]) -> dict:
    """Pick the grid point maximizing mean final-third micro-F1 over the
    tuning seeds; ties break in grid order."""
    if not grid:
        raise ConfigError("tuning grid is empty")
    best, best_score = None, -1.0
    for point in grid:
        trial = RunConfig.from_json({**cfg.to_json(), **point})
        scores = [mean_final_third(run_seed(trial, s).records) for s in cfg.tuning_seeds]
        score = float(np.mean(scores))
        log.info("tune %s -> %.4f", point, score)
        if score > best_score:
            best, best_score = point, score
    return dict(best)


def write_metrics_csv(results: dict[int, list[MetricRecord]], path: str | Path):
    import csv as _csv

    with open(path, "w", newline="") as fh:
        writer = _csv.writer(fh)
        writer.writerow(["seed", "t", "micro_f1", "interactions", "hierarchy_version"])
        for seed in sorted(results):
            for r in results[seed]:
                writer.writerow([r.seed, r.t, f"{r.micro_f1:.6f}", r.interactions,
                                 r.hierarchy_version])


def write_event_log(engine: Engine, path: str | Path):
    with open(path, "w") as fh:
        for event in engine.events:
            fh.write(json.dumps(event) + "\n")
