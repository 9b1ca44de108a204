"""Frame semantic parsing with in-context learning over FrameNet frames."""
from .dataset import DatasetSplit, ShotProfile, SplitConfig, shot_schedule, stratified_split
from .estimators import ArgumentLabeler, FrameIdentifier, FrameSemanticParser
from .evaluation import EvalReport, FIView, Scope, fi_report, match_items, micro_report
from .framenet_xml import import_framenet
from .parsing import ParseOutcome, parse_prediction
from .prompts import AblationLevel, Prompt, PromptConfig, estimate_prompt_budget, render_prompt
from .runner import ExperimentSpec, RunRecord, TaskMode, run_experiment
from .store import FrameStore, Span, core_elements, export_normalized, load_normalized
from .wire import FrameInstance, FrameTargetPair, RoleFiller, TaskKind

__version__ = "0.1.0"
