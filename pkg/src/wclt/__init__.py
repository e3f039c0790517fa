"""Weak-coupling-limit-type quantum Markov generators and their stationary structure."""
