"""
Harness package initialization.
"""

from .config import SweepConfig, load_sweep_config
from .pipeline import TrialPipeline
from .sweep import SweepResult, SweepRow, export_images, run_sweep
from .compare import compare_with_experimental
from .outputs import emit_outputs

__all__ = ["SweepConfig", "load_sweep_config", "TrialPipeline", "SweepResult", "SweepRow",
           "export_images", "run_sweep", "compare_with_experimental", "emit_outputs"]
