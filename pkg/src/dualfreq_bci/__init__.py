"""Offline dual-frequency SSmVEP pipeline: target coding, stimulus schedules,
synthetic EEG, zero-phase preprocessing, CCA / bifold-CCA detection and evaluation."""

from .cca import (
    ReferenceBank,
    ScoreVector,
    bifold_references,
    cca_max_corr,
    classify_bcca,
    classify_cca,
    reference_signals,
)
from .coding import FrequencyPlan, assign_target_pairs, derive_adjacent_frequencies, validate_plan
from .dsp import design_cheby1_bandpass, filtfilt, welch_psd
from .metrics import anova_oneway, confusion_and_indices, itr
from .pipeline import RunConfig, classify_dataset, time_window_sweep
from .stimulus import dual_motion_schedule, measured_inversion_frequency, stimulus_sequence
from .synth import Dataset, SynthConfig, TrialRecord, pink_noise, synth_dataset, synth_trial

__version__ = "0.1.0"
