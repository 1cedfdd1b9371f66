"""Greenhouse digital twin with an intelligent-control stack.

Subpackages and modules mirror the system's layers: ``plant`` and
``sensing`` simulate the greenhouse, ``telemetry`` carries readings to the
cloud side, ``pipeline`` cleans them, ``predictor`` forecasts, ``control``
decides, ``resources`` accounts, ``reliability`` fails over and ``sim``
runs the closed loop.
"""

__version__ = "0.1.0"
