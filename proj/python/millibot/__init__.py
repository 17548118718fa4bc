"""Python frontend for the millirobot navigation testbed.

The heavy lifting lives in the compiled extension ``_core``. When the package
is installed the extension sits inside it; in a build tree the extension is a
sibling on ``PYTHONPATH``, so fall back to a top-level import.
"""

try:
    from ._core import (
        calibrate_default,
        drag_coefficient,
        metrics,
        pixel_pitch_mm,
        plan_default,
        run_scenario,
    )
except ImportError:
    from _core import (
        calibrate_default,
        drag_coefficient,
        metrics,
        pixel_pitch_mm,
        plan_default,
        run_scenario,
    )

__all__ = [
    "calibrate_default",
    "drag_coefficient",
    "metrics",
    "pixel_pitch_mm",
    "plan_default",
    "run_scenario",
]

__version__ = "0.1.0"
