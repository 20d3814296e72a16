"""Streaming hierarchical multi-label classification under knowledge drift:
kernel two-sample detection, interactive/automated disambiguation, and
knowledge-aware adaptation."""

from .hierarchy import (ConceptHierarchy, HierarchyError, LabelVector, closure,
                        is_consistent, is_isomorphic)
from .kernels import (ExamplePoint, KernelConfig, KernelError, gram,
                      median_heuristic_bandwidth, mmd_squared, product_kernel,
                      witness_examples, witness_values)
from .windows import (ClassifierConfig, Example, WindowError, WindowPair,
                      WindowStore, init_windows)
from .detector import DetectionResult, DetectorConfig, detect
from .disambiguation import (DisambiguationError, DriftDescription, KdEdit,
                             LlrConfig, OracleUser, build_description,
                             llr_disambiguate, merge_user_edits)
from .adaptation import AdaptationError, AdaptationReport, adapt, forget_adapt
from .streams import (DriftSchedule, GroundTruth, HstaggerConfig, KdEvent,
                      StreamError, apply_schedule, build_schedule,
                      hstagger_generate, load_dataset, next_example,
                      sample_rule, save_dataset)
from .runner import (ConfigError, Engine, MetricRecord, RunConfig, micro_f1,
                     run, run_seed, scripted_user, tune)

__all__ = [name for name in dir() if not name.startswith("_")]
