"""Diagnostic figure rendering for loopfield simulation outputs.

Pure post-processing: every figure is a batch-rendered view over the
CSV/JSON files written by the ``loopfield`` CLI, with analytic reference
curves recomputed from the parameters recorded in each file's header
comment.  Nothing here ever re-runs a simulation.
"""

__version__ = "0.1.0"
