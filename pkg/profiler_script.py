"""Profiler script for the simulation-heavy paths.
Run as `python3 -m cProfile -o power.pstat profiler_script.py` from the root dir of the repo,
then view the report with `snakeviz power.pstat`
"""
import numpy as np

from probesizer.core import PairedPredictions
from probesizer.lab import CaseStudyParams, run_case_study
from probesizer.stats import power_curve

rng = np.random.default_rng(0)
correct_a = rng.random((5, 16384)) < 0.85
correct_b = rng.random((5, 16384)) < 0.80
predictions = PairedPredictions(tuple(range(16384)), tuple(range(5)), correct_a, correct_b)
curve_16384 = power_curve(predictions, num_sims_per_seed=1000, rng_seed=0)

report_quick = run_case_study("gaussian-noise", CaseStudyParams.quick(), rng_seed=0)
