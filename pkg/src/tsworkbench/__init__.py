"""Annotation workbench for time-series datasets.

Sample selection (random, farthest-first, free-form over 2D views),
annotation session management, and post-annotation analysis (label
distributions, failure risk, downstream learning curves), behind a CLI
and an HTTP API.
"""

__version__ = "0.1.0"
