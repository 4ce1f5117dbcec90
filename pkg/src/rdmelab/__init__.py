"""Reaction-diffusion master equation breakdown laboratory."""
