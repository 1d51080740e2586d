"""Sequential fraud triage: reward-maximizing query strategies over an
unlabeled pool, a clamped multiplicative-weights meta-strategy (CAFDA),
an experiment harness, and a human-in-the-loop oracle service."""

__version__ = "0.1.0"
