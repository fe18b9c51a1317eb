"""Regional epidemic curve fitting with a two-parameter discrete model.

Pipeline: ``ingest`` (open-data CSV to canonical records), ``prep``
(smoothed and corrected excess deaths), ``dynamics`` (the model),
``torczon`` (derivative-free search), ``identify`` (joint fit across
regions) and ``lagfit`` (lag and scale of other indicators).
"""

__version__ = "0.1.0"

from .dynamics import GlobalParams, RegionInit, delta_closed_form, peak_step, simulate
from .identify import FitWindow, IdentifiedModel, identify
from .series import DailySeries

__all__ = [
    "DailySeries",
    "FitWindow",
    "GlobalParams",
    "IdentifiedModel",
    "RegionInit",
    "delta_closed_form",
    "identify",
    "peak_step",
    "simulate",
]
