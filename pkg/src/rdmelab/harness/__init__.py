"""Experiment harness: configuration, sweeps, CSV output, validation and the command line."""
