"""Experiment orchestration: configs, replicated runs, regret accounting, persistence."""
